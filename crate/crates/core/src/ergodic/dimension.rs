use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::fit_line;

/// Ball masses outside this range are left out of the slope fits.
pub const FRACTION_RANGE: (f64, f64) = (1e-4, 1e-1);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSlope {
    pub x: f64,
    /// Least-squares slope of `log μ(B(x, r))` against `log r`; `None` with
    /// fewer than three usable radii.
    pub slope: Option<f64>,
    pub radii_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDimensionEstimate {
    pub per_point: Vec<PointSlope>,
    /// Slope of the point-averaged `log μ(B(x, r))` against `log r`.
    pub pooled: f64,
    /// Radii entering the pooled fit.
    pub pooled_radii: usize,
    pub points_used: usize,
}

/// Empirical fraction of sorted samples in `[x - r, x + r]`.
fn ball_fraction(sorted: &[f64], x: f64, r: f64) -> f64 {
    let lo = sorted.partition_point(|&s| s < x - r);
    let hi = sorted.partition_point(|&s| s <= x + r);
    (hi - lo) as f64 / sorted.len() as f64
}

/// Local dimension of the empirical measure of `samples` at each of `points`.
///
/// Per-point slopes use the radii whose ball mass lies in [`FRACTION_RANGE`].
/// The pooled slope averages `log μ(B(x, r))` over all points at each radius
/// and keeps the radii where every ball is nonempty and the geometric mean
/// mass lies in the range.
pub fn local_dimension(points: &[f64], samples: &[f64], radii: &[f64]) -> Result<LocalDimensionEstimate> {
    if samples.is_empty() || points.is_empty() {
        return Err(Error::Domain("need evaluation points and samples".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Domain("radii must be positive".into()));
    }
    let (rmin, rmax) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if rmax / rmin < 1e4 {
        return Err(Error::Domain(format!("radii span {rmin:e}..{rmax:e}, need four decades")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (fmin, fmax) = FRACTION_RANGE;
    let in_range = |f: f64| f >= fmin && f <= fmax;

    let fractions: Vec<Vec<f64>> = points
        .iter()
        .map(|&x| radii.iter().map(|&r| ball_fraction(&sorted, x, r)).collect())
        .collect();

    let per_point: Vec<PointSlope> = points
        .iter()
        .zip(&fractions)
        .map(|(&x, fs)| {
            let (lr, lf): (Vec<f64>, Vec<f64>) = radii
                .iter()
                .zip(fs)
                .filter(|(_, &f)| in_range(f))
                .map(|(r, f)| (r.ln(), f.ln()))
                .unzip();
            let slope = if lr.len() >= 3 { fit_line(&lr, &lf).map(|l| l.slope) } else { None };
            PointSlope {
                x,
                slope,
                radii_used: lr.len(),
            }
        })
        .collect();
    let points_used = per_point.iter().filter(|p| p.slope.is_some()).count();

    let (lr, lm): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .enumerate()
        .filter(|(j, _)| fractions.iter().all(|fs| fs[*j] > 0.0))
        .map(|(j, r)| {
            let mean = fractions.iter().map(|fs| fs[j].ln()).sum::<f64>() / points.len() as f64;
            (r.ln(), mean)
        })
        .filter(|(_, m)| in_range(m.exp()))
        .unzip();
    let pooled = if lr.len() >= 3 { fit_line(&lr, &lm).map(|l| l.slope) } else { None };
    let Some(pooled) = pooled else {
        return Err(Error::Precondition(
            "fewer than three radii with mean ball mass in the fitting range".into(),
        ));
    };
    Ok(LocalDimensionEstimate {
        per_point,
        pooled,
        pooled_radii: lr.len(),
        points_used,
    })
}

/// `n` radii spaced geometrically from `lo` to `hi`.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n.max(2) - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ergodic::{bernoulli_entropy, sample_bernoulli_measure};

    #[test]
    fn lebesgue_has_dimension_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples: Vec<f64> = (0..1_000_000).map(|_| rng.gen()).collect();
        let points: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let est = local_dimension(&points, &samples, &geometric_radii(1e-6, 0.04, 30)).unwrap();
        assert_eq!(est.points_used, 19);
        assert!((est.pooled - 1.0).abs() < 0.03, "{}", est.pooled);
    }

    #[test]
    fn bernoulli_pooled_slope() {
        let samples = sample_bernoulli_measure(0.3, 50, 1_000_000, 2).unwrap();
        let points = sample_bernoulli_measure(0.3, 50, 500, 99).unwrap();
        let est = local_dimension(&points, &samples, &geometric_radii(1e-7, 0.1, 40)).unwrap();
        let expected = bernoulli_entropy(0.3) / std::f64::consts::LN_2;
        assert!((est.pooled - expected).abs() < 0.03, "{} vs {expected}", est.pooled);
    }

    #[test]
    fn short_radius_span_is_rejected() {
        assert!(local_dimension(&[0.5], &[0.5], &[1e-3, 1e-1]).is_err());
        assert!(local_dimension(&[0.5], &[0.5], &[0.0, 1e-1]).is_err());
    }

    #[test]
    fn ball_fraction_counts_closed_balls() {
        let s = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(ball_fraction(&s, 0.25, 0.05), 0.5);
        assert_eq!(ball_fraction(&s, 0.9, 0.1), 0.0);
    }
}
