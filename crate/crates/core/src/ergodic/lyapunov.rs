use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{Orbit, OrbitStart, PiecewiseMap};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    /// `(1/n) Σ log|Df|` over the post-burn-in orbit.
    pub chi: f64,
    pub n: usize,
    /// Running averages `(m, chi_m)` at every tenth of the orbit.
    pub checkpoints: Vec<(usize, f64)>,
}

/// Birkhoff average of `log|Df|` along one orbit.
pub fn birkhoff_lyapunov(
    map: &PiecewiseMap,
    start: OrbitStart,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(Error::Domain("orbit length must be positive".into()));
    }
    let every = (n / 10).max(1);
    let mut sum = CompensatedSum::new();
    let mut checkpoints = Vec::with_capacity(10);
    for (i, item) in Orbit::new(map, start, seed)?.take(burn_in + n).enumerate() {
        let p = item?;
        if i < burn_in {
            continue;
        }
        if !p.log_abs_deriv.is_finite() {
            return Err(Error::OrbitBreak {
                index: i,
                reason: format!("log|Df| = {} at {}", p.log_abs_deriv, p.x()),
            });
        }
        sum.add(p.log_abs_deriv);
        let m = i + 1 - burn_in;
        if m % every == 0 {
            checkpoints.push((m, sum.value() / m as f64));
        }
    }
    Ok(LyapunovEstimate {
        chi: sum.value() / n as f64,
        n,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;

    #[test]
    fn tent_is_exactly_log_two() {
        let tent = PiecewiseMap::tent();
        let est = birkhoff_lyapunov(&tent, OrbitStart::At(0.3141), 10_000, 0, 0).unwrap();
        assert!((est.chi - LN_2).abs() < 1e-15);
        assert_eq!(est.checkpoints.len(), 10);
        assert_eq!(est.checkpoints[9].0, 10_000);
    }

    #[test]
    fn g_half_short_orbit() {
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        let est = birkhoff_lyapunov(&g, OrbitStart::Invariant, 200_000, 0, 7).unwrap();
        assert!((est.chi - LN_2).abs() < 0.03 * LN_2, "{}", est.chi);
    }

    #[test]
    fn plain_map_break_propagates() {
        let gb = PiecewiseMap::g_b(2.0, 1.0).unwrap();
        assert!(birkhoff_lyapunov(&gb, OrbitStart::At(0.0), 10, 0, 0).is_err());
        assert!(birkhoff_lyapunov(&gb, OrbitStart::At(0.3), 0, 0, 0).is_err());
    }
}
