use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::PiecewiseMap;
use crate::numeric::{fit_line, least_squares, Quadrature};

/// Gauss-Legendre nodes per dyadic annulus.
pub const ANNULUS_NODES: usize = 64;
/// Geometric model: convergent at or below this fitted ratio.
pub const CONVERGENT_RATIO: f64 = 1.0 - 0.02;
/// Geometric model: divergent at or above this fitted ratio.
pub const DIVERGENT_RATIO: f64 = 1.0 - 0.005;
/// Power-law model: convergent at or above this fitted exponent.
pub const CONVERGENT_EXPONENT: f64 = 1.0 + 0.02;
/// Power-law model: divergent at or below this fitted exponent.
pub const DIVERGENT_EXPONENT: f64 = 1.0 + 0.005;
/// A divergent verdict also needs `Σ A_k` to exceed this multiple of the first term.
pub const DIVERGENT_MASS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproachSide {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    Lebesgue,
    /// Density of the pulled-back Lebesgue measure of a tent-conjugate map.
    ExactDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Decay law fitted to the annulus contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayModel {
    /// `A_k ≈ C r^k`.
    Geometric,
    /// `A_k ≈ C (k + k_0)^-s exp(b / (k + k_0))`.
    PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityVerdict {
    pub verdict: Verdict,
    /// `A_k`, the contribution of the annulus at distance `[2^-(k+1), 2^-k]`.
    pub annulus_sums: Vec<f64>,
    /// Decay exponent of the chosen model: `s` for the power law, `-ln r` for the geometric law.
    pub fitted_exponent: f64,
    /// Fitted geometric ratio `r`, reported for both models.
    pub fitted_ratio: f64,
    pub model: DecayModel,
    pub k_range: (usize, usize),
}

fn annulus_sum(
    map: &PiecewiseMap,
    quad: &Quadrature,
    point: f64,
    sign: f64,
    k: usize,
    weight: Weight,
) -> Result<f64> {
    let near = point + sign * (-(k as f64 + 1.0)).exp2();
    let far = point + sign * (-(k as f64)).exp2();
    let (lo, hi) = if near < far { (near, far) } else { (far, near) };
    let mid = 0.5 * (lo + hi);
    let bi = map.branch_of(mid).map_err(|_| Error::Geometry { lo, hi })?;
    let br = &map.branches()[bi];
    if lo < br.domain().lo() || hi > br.domain().hi() {
        return Err(Error::Geometry { lo, hi });
    }
    let conj = match weight {
        Weight::Lebesgue => None,
        Weight::ExactDensity => Some(*map.conjugacy().ok_or_else(|| {
            Error::Precondition("the exact-density weight needs a tent-conjugate map".into())
        })?),
    };
    let integrand = |x: f64| {
        let p = map.point(x);
        let v = br.log_abs_deriv_at(&p).abs();
        match conj {
            None => v,
            Some(c) => v * c.log_density(&p).exp(),
        }
    };
    Ok(quad.integrate(lo, hi, integrand))
}

/// Classifies `∫ |log|Df|| w` near `singular_point` as convergent or divergent
/// from the decay of dyadic annulus contributions `A_k` over `k_range`.
///
/// Two laws are fitted to `ln A_k`: geometric and a shifted power law with a
/// `1/(k + k_0)` correction (the shift is found by grid search); the one with
/// the smaller residual decides.
pub fn singular_integral_classify(
    map: &PiecewiseMap,
    singular_point: f64,
    side: ApproachSide,
    weight: Weight,
    k_range: (usize, usize),
) -> Result<IntegrabilityVerdict> {
    let (k_lo, k_hi) = k_range;
    if k_hi < k_lo + 4 {
        return Err(Error::Domain(format!("k range {k_lo}..={k_hi} too short to fit")));
    }
    let quad = Quadrature::new(ANNULUS_NODES);
    let signs: &[f64] = match side {
        ApproachSide::Left => &[-1.0],
        ApproachSide::Right => &[1.0],
        ApproachSide::Both => &[-1.0, 1.0],
    };
    let mut sums = Vec::with_capacity(k_hi - k_lo + 1);
    for k in k_lo..=k_hi {
        let mut a = 0.0;
        for &s in signs {
            a += annulus_sum(map, &quad, singular_point, s, k, weight)?;
        }
        sums.push(a);
    }
    let ks: Vec<f64> = (k_lo..=k_hi).map(|k| k as f64).collect();
    let inconclusive = |sums: Vec<f64>| IntegrabilityVerdict {
        verdict: Verdict::Inconclusive,
        annulus_sums: sums,
        fitted_exponent: f64::NAN,
        fitted_ratio: f64::NAN,
        model: DecayModel::Geometric,
        k_range,
    };
    if sums.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Ok(inconclusive(sums));
    }
    let logs: Vec<f64> = sums.iter().map(|a| a.ln()).collect();
    let Some(geo) = fit_line(&ks, &logs) else {
        return Ok(inconclusive(sums));
    };
    let ratio = geo.slope.exp();

    let mut best: Option<(f64, f64)> = None;
    let mut k0 = 1.0 - k_lo as f64;
    while k0 <= 2.0 * k_hi as f64 {
        let shifted: Vec<f64> = ks.iter().map(|k| k + k0).collect();
        let cols = vec![
            vec![1.0; ks.len()],
            shifted.iter().map(|u| -u.ln()).collect(),
            shifted.iter().map(|u| 1.0 / u).collect(),
        ];
        if let Some((b, ssr)) = least_squares(&cols, &logs) {
            if best.map_or(true, |(r, _)| ssr < r) {
                best = Some((ssr, b[1]));
            }
        }
        k0 += 0.05;
    }

    let total: f64 = sums.iter().sum();
    let heavy = total > DIVERGENT_MASS * sums[0];
    let (model, exponent, verdict) = match best {
        Some((ssr, s)) if ssr < geo.ssr => {
            let v = if s >= CONVERGENT_EXPONENT {
                Verdict::Convergent
            } else if s <= DIVERGENT_EXPONENT && heavy {
                Verdict::Divergent
            } else {
                Verdict::Inconclusive
            };
            (DecayModel::PowerLaw, s, v)
        }
        _ => {
            let v = if ratio <= CONVERGENT_RATIO {
                Verdict::Convergent
            } else if ratio >= DIVERGENT_RATIO && heavy {
                Verdict::Divergent
            } else {
                Verdict::Inconclusive
            };
            (DecayModel::Geometric, -geo.slope, v)
        }
    };
    Ok(IntegrabilityVerdict {
        verdict,
        annulus_sums: sums,
        fitted_exponent: exponent,
        fitted_ratio: ratio,
        model,
        k_range,
    })
}
