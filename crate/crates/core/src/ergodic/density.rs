use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{OpenInterval, Orbit, OrbitStart, PiecewiseMap, Point, TentConjugacy};
use crate::numeric::CompensatedSum;

/// Binned probability density on an interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub interval: OpenInterval,
    pub bin_count: usize,
    /// Probability of each bin; sums to one.
    pub bin_masses: Vec<f64>,
    pub samples: usize,
    /// Index at which the generating orbit broke, if it did.
    pub break_index: Option<usize>,
}

impl DensityEstimate {
    /// Normalizes nonnegative bin weights into an estimate.
    pub fn from_weights(interval: OpenInterval, weights: Vec<f64>, samples: usize) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("a density needs at least one bin".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("bin weights must be finite and nonnegative".into()));
        }
        let total = weights.iter().copied().collect::<CompensatedSum>().value();
        if total <= 0.0 {
            return Err(Error::Domain("bin weights sum to zero".into()));
        }
        Ok(Self {
            interval,
            bin_count: weights.len(),
            bin_masses: weights.into_iter().map(|w| w / total).collect(),
            samples,
            break_index: None,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.interval.len() / self.bin_count as f64
    }

    /// Left and right edge of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        let lo = self.interval.lo() + i as f64 * w;
        let hi = if i + 1 == self.bin_count {
            self.interval.hi()
        } else {
            lo + w
        };
        (lo, hi)
    }

    /// Density value (mass over width) of each bin.
    pub fn densities(&self) -> Vec<f64> {
        let w = self.bin_width();
        self.bin_masses.iter().map(|m| m / w).collect()
    }

    /// Bin containing `x`, with points at or beyond the ends clamped.
    pub fn bin_of(&self, x: f64) -> usize {
        let f = (x - self.interval.lo()) / self.interval.len() * self.bin_count as f64;
        if f <= 0.0 {
            0
        } else {
            (f as usize).min(self.bin_count - 1)
        }
    }

    /// `Σ |m_i - m'_i|` against an estimate on the same bins.
    pub fn l1(&self, other: &DensityEstimate) -> Result<f64> {
        if self.bin_count != other.bin_count || self.interval != other.interval {
            return Err(Error::Domain("estimates live on different bins".into()));
        }
        Ok(self
            .bin_masses
            .iter()
            .zip(&other.bin_masses)
            .map(|(a, b)| (a - b).abs())
            .collect::<CompensatedSum>()
            .value())
    }
}

/// Histogram of the first `n` orbit points over the ambient interval.
///
/// If the orbit breaks, the histogram of the points before the break is
/// returned with `break_index` set.
pub fn density_histogram(
    map: &PiecewiseMap,
    start: OrbitStart,
    n: usize,
    bins: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    if n == 0 || bins == 0 {
        return Err(Error::Domain("histogram needs positive n and bin count".into()));
    }
    let interval = map.ambient();
    let mut est = DensityEstimate {
        interval,
        bin_count: bins,
        bin_masses: vec![0.0; bins],
        samples: 0,
        break_index: None,
    };
    let mut counts = vec![0u64; bins];
    for item in Orbit::new(map, start, seed)?.positions_only().take(n) {
        match item {
            Ok(p) => {
                counts[est.bin_of(p.x())] += 1;
                est.samples += 1;
            }
            Err(Error::OrbitBreak { index, .. }) => {
                est.break_index = Some(index);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if est.samples == 0 {
        return Err(Error::OrbitBreak {
            index: 0,
            reason: "no orbit points before the break".into(),
        });
    }
    let total = est.samples as f64;
    est.bin_masses = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(est)
}

/// Exact invariant mass of every bin of `est`.
pub fn exact_masses(est: &DensityEstimate, conj: &TentConjugacy) -> Vec<f64> {
    let amb = est.interval;
    (0..est.bin_count)
        .map(|i| {
            let (a, b) = est.edges(i);
            conj.mass(&Point::from_x(a, amb), &Point::from_x(b, amb))
        })
        .collect()
}

/// L1 distance between the histogram and the closed-form invariant density.
///
/// Bin masses of the exact density come from its distribution function, which
/// is available in closed form through the conjugacy.
pub fn compare_exact(est: &DensityEstimate, conj: &TentConjugacy) -> f64 {
    exact_masses(est, conj)
        .iter()
        .zip(&est.bin_masses)
        .map(|(e, m)| (e - m).abs())
        .collect::<CompensatedSum>()
        .value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Quadrature;

    #[test]
    fn exact_masses_agree_with_density_quadrature() {
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        let conj = *g.conjugacy().unwrap();
        let est = DensityEstimate::from_weights(OpenInterval::unit(), vec![1.0; 20], 0).unwrap();
        let quad = Quadrature::new(64);
        // bins away from the endpoints, where the density is smooth
        for (i, m) in exact_masses(&est, &conj).iter().enumerate().skip(1).take(18) {
            let (a, b) = est.edges(i);
            let q = quad.integrate(a, b, |x| conj.log_density(&Point::unit(x)).exp());
            assert!((m - q).abs() < 1e-10, "bin {i}: {m} vs {q}");
        }
        let total: f64 = exact_masses(&est, &conj).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tent_histogram_is_flat() {
        let tent = PiecewiseMap::tent();
        let est = density_histogram(&tent, OrbitStart::Invariant, 1_000_000, 100, 3).unwrap();
        assert_eq!(est.samples, 1_000_000);
        assert!((est.bin_masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(compare_exact(&est, &TentConjugacy::Identity) < 0.02);
    }

    #[test]
    fn g_half_histogram() {
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        let est = density_histogram(&g, OrbitStart::Invariant, 1_000_000, 200, 5).unwrap();
        assert!(compare_exact(&est, g.conjugacy().unwrap()) < 0.05);
        // far from the uniform density
        assert!(compare_exact(&est, &TentConjugacy::Identity) > 0.1);
    }

    #[test]
    fn broken_orbit_gives_partial_histogram() {
        use std::sync::Arc;

        use crate::maps::{BoundaryTag, Branch, FnBranch, MapKind, Orientation};
        // x -> 2x on (0, 1/2) only; 0.2 -> 0.4 -> 0.8 leaves the domain
        let branch = Branch::new(
            OpenInterval::new(0.0, 0.5).unwrap(),
            Orientation::Increasing,
            OpenInterval::unit(),
            [BoundaryTag::Finite; 2],
            Arc::new(FnBranch {
                value: |x: f64| 2.0 * x,
                log_abs_deriv: |_| std::f64::consts::LN_2,
            }),
        );
        let map = PiecewiseMap::new("half doubling", OpenInterval::unit(), vec![branch], MapKind::Plain).unwrap();
        let est = density_histogram(&map, OrbitStart::At(0.2), 100, 10, 0).unwrap();
        assert_eq!(est.break_index, Some(2));
        assert_eq!(est.samples, 2);
        assert_eq!(est.bin_masses[2], 0.5);
        assert_eq!(est.bin_masses[4], 0.5);
        assert!(matches!(
            density_histogram(&map, OrbitStart::At(0.7), 10, 10, 0),
            Err(Error::OrbitBreak { index: 0, .. })
        ));
    }

    #[test]
    fn from_weights_rejects_bad_input() {
        let unit = OpenInterval::unit();
        assert!(DensityEstimate::from_weights(unit, vec![], 0).is_err());
        assert!(DensityEstimate::from_weights(unit, vec![0.0, 0.0], 0).is_err());
        assert!(DensityEstimate::from_weights(unit, vec![1.0, -1.0], 0).is_err());
        let e = DensityEstimate::from_weights(unit, vec![1.0, 3.0], 4).unwrap();
        assert_eq!(e.bin_masses, vec![0.25, 0.75]);
        assert_eq!(e.densities(), vec![0.5, 1.5]);
        assert_eq!(e.bin_of(1.0), 1);
    }
}
