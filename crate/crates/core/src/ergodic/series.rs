use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
}

/// Partial sums of the two geometric series bracketing the contribution of
/// the parabolic neighbourhood to the Lyapunov integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    /// Common ratio `1 / (2 alpha)`.
    pub ratio: f64,
    /// Partial sums of `(alpha - 1) log p alpha^-(i+1) 2^-(i+N+1)`.
    pub lower: Vec<f64>,
    /// Partial sums of `(alpha - 1) log p alpha^-i 2^-(i+N+1)`.
    pub upper: Vec<f64>,
    /// Closed-form sums, when the series converge.
    pub lower_limit: Option<f64>,
    pub upper_limit: Option<f64>,
    pub verdict: SeriesVerdict,
}

/// Both bracketing series for the `f_alpha` example with infinite exponent.
///
/// Note that for `alpha < 1` every `lower` term is `1/alpha` times the
/// matching `upper` term.
pub fn infinite_exponent_series(alpha: f64, p: f64, n: u32, terms: usize) -> Result<SeriesReport> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1)")));
    }
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1)")));
    }
    if terms == 0 {
        return Err(Error::Domain("need at least one term".into()));
    }
    let ratio = 1.0 / (2.0 * alpha);
    let scale = (alpha - 1.0) * p.ln();
    let upper_first = scale * (-(n as f64 + 1.0)).exp2();
    let lower_first = upper_first / alpha;
    let partials = |first: f64| {
        let mut sum = CompensatedSum::new();
        let mut term = first;
        (0..terms)
            .map(|_| {
                sum.add(term);
                term *= ratio;
                sum.value()
            })
            .collect::<Vec<f64>>()
    };
    let verdict = if ratio >= 1.0 {
        SeriesVerdict::Divergent
    } else {
        SeriesVerdict::Convergent
    };
    let limit = |first: f64| (verdict == SeriesVerdict::Convergent).then(|| first / (1.0 - ratio));
    Ok(SeriesReport {
        ratio,
        lower: partials(lower_first),
        upper: partials(upper_first),
        lower_limit: limit(lower_first),
        upper_limit: limit(upper_first),
        verdict,
    })
}

/// `h <= max(0, chi) + tolerance`.
pub fn ruelle_check(h: f64, chi: f64, tolerance: f64) -> bool {
    h <= chi.max(0.0) + tolerance
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;
    use crate::ergodic::bernoulli_entropy;

    /// Direct evaluation of the i-th term, no recurrences.
    fn term(alpha: f64, p: f64, n: u32, i: i32, shift: i32) -> f64 {
        (alpha - 1.0) * p.ln() * alpha.powi(-(i + shift)) * 2f64.powi(-(i + n as i32 + 1))
    }

    #[test]
    fn verdicts() {
        let r = infinite_exponent_series(0.4, 0.3, 2, 50).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Divergent);
        assert!((r.ratio - 1.25).abs() < 1e-15);
        assert!(r.lower_limit.is_none());
        let r = infinite_exponent_series(0.7, 0.3, 2, 200).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Convergent);
        assert!((r.ratio - 0.714_285_714).abs() < 1e-9);
        assert!((r.lower[199] - r.lower_limit.unwrap()).abs() < 1e-10);
        assert!((r.upper[199] - r.upper_limit.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn boundary_case_grows_linearly() {
        let r = infinite_exponent_series(0.5, 0.3, 1, 100).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Divergent);
        let step = r.upper[0];
        for (i, s) in r.upper.iter().enumerate() {
            assert!((s - step * (i + 1) as f64).abs() < 1e-12 * s);
        }
    }

    #[test]
    fn partial_sums_match_direct_terms() {
        for &alpha in &[0.3, 0.55, 0.9] {
            let r = infinite_exponent_series(alpha, 0.2, 3, 30).unwrap();
            let mut lo = 0.0;
            let mut up = 0.0;
            for i in 0..30 {
                lo += term(alpha, 0.2, 3, i, 1);
                up += term(alpha, 0.2, 3, i, 0);
                assert!((r.lower[i as usize] - lo).abs() < 1e-12 * lo);
                assert!((r.upper[i as usize] - up).abs() < 1e-12 * up);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(infinite_exponent_series(1.0, 0.3, 0, 5).is_err());
        assert!(infinite_exponent_series(0.0, 0.3, 0, 5).is_err());
        assert!(infinite_exponent_series(0.5, 1.0, 0, 5).is_err());
    }

    #[test]
    fn ruelle_examples() {
        assert!(ruelle_check(LN_2, LN_2, 0.02));
        assert!(ruelle_check(bernoulli_entropy(0.3), LN_2, 0.02));
        assert!(!ruelle_check(LN_2, bernoulli_entropy(0.3), 0.02));
        assert!(ruelle_check(0.01, -1.0, 0.02));
    }
}
