//! Distortion machinery: Hölder checks, the distortion radius constant,
//! iterate derivatives and the higher-derivative growth condition.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{Branch, OpenInterval, PiecewiseMap, Point};
use crate::numeric::{richardson_derivative, CompensatedSum};

/// `a_0 = 0.99 log 2`; `log(1 - a/2) > -a` holds on all of `(0, 1.594)`.
pub const A0: f64 = 0.99 * LN_2;

/// Slack when comparing `|Df|` against the regime thresholds `2` and `1/2`.
const REGIME_SLACK: f64 = 1e-12;

/// Radius constant `c_0 = 0.99 min(a_0, 1 / (2C))`, so `0 < c_0 < log 2` and
/// `C c_0 < 1/2`. The exponent does not enter.
pub fn c0_constant(c: f64, _epsilon: f64) -> f64 {
    0.99 * A0.min(1.0 / (2.0 * c))
}

/// Lower and upper bounds on `φ(x') / φ(x)` for a `(C, ε)`-Hölder `φ` with `|φ(x)| > c`.
pub fn ratio_bounds(c: f64, holder_c: f64, epsilon: f64, dist: f64) -> (f64, f64) {
    let t = holder_c * c * c * dist.powf(epsilon) / (c * c * c);
    (1.0 - t, 1.0 + t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HolderRegime {
    /// `|Df| <= 2`, checking `φ = Df`.
    SmallDerivative,
    /// `|Df| >= 1/2`, checking `φ = 1/Df`.
    LargeDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub regime: HolderRegime,
    /// Largest `|φ(x) - φ(x')| / |x - x'|^ε` over the admissible pairs.
    pub max_ratio: f64,
    pub witness: (f64, f64),
    pub pass: bool,
    pub regime_empty: bool,
    pub pairs_used: usize,
}

impl HolderReport {
    fn empty(regime: HolderRegime) -> Self {
        Self {
            regime,
            max_ratio: 0.0,
            witness: (f64::NAN, f64::NAN),
            pass: true,
            regime_empty: true,
            pairs_used: 0,
        }
    }
}

/// Random pairs in `window`: one point uniform, the other at a log-uniform
/// distance between `1e-8` and `1` times the window length.
fn sample_pairs(window: OpenInterval, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = window.len();
    (0..n)
        .filter_map(|_| {
            let x = window.lo() + len * rng.gen::<f64>();
            let d = len * 10f64.powf(-8.0 * rng.gen::<f64>());
            let xp = if rng.gen::<bool>() { x + d } else { x - d };
            (window.contains(x) && window.contains(xp) && x != xp).then_some((x, xp))
        })
        .collect()
}

/// Hölder conditions for `Df` where `|Df| <= 2` and for `1/Df` where `|Df| >= 1/2`.
pub fn holder_check(branch: &Branch, c: f64, epsilon: f64, n_pairs: usize, seed: u64) -> (HolderReport, HolderReport) {
    holder_check_on(branch, branch.domain(), c, epsilon, n_pairs, seed)
}

/// [`holder_check`] with pairs drawn from a window inside the branch domain.
pub fn holder_check_on(
    branch: &Branch,
    window: OpenInterval,
    c: f64,
    epsilon: f64,
    n_pairs: usize,
    seed: u64,
) -> (HolderReport, HolderReport) {
    let window = window.intersect(&branch.domain()).unwrap_or(window);
    let pairs = sample_pairs(window, n_pairs, seed);
    let small = regime_report(branch, &pairs, HolderRegime::SmallDerivative, c, epsilon);
    let large = regime_report(branch, &pairs, HolderRegime::LargeDerivative, c, epsilon);
    (small, large)
}

fn regime_report(branch: &Branch, pairs: &[(f64, f64)], regime: HolderRegime, c: f64, epsilon: f64) -> HolderReport {
    let admissible = |ld: f64| match regime {
        HolderRegime::SmallDerivative => ld <= LN_2 + REGIME_SLACK,
        HolderRegime::LargeDerivative => ld >= -LN_2 - REGIME_SLACK,
    };
    let phi = |x: f64| match regime {
        HolderRegime::SmallDerivative => branch.deriv(x),
        HolderRegime::LargeDerivative => branch.orientation().sign() * (-branch.log_abs_deriv(x)).exp(),
    };
    let mut report = HolderReport::empty(regime);
    for &(x, xp) in pairs {
        let (lx, lxp) = (branch.log_abs_deriv(x), branch.log_abs_deriv(xp));
        if !(lx.is_finite() && lxp.is_finite() && admissible(lx) && admissible(lxp)) {
            continue;
        }
        report.regime_empty = false;
        report.pairs_used += 1;
        let ratio = (phi(x) - phi(xp)).abs() / (x - xp).abs().powf(epsilon);
        if ratio > report.max_ratio || report.witness.0.is_nan() {
            report.max_ratio = ratio.max(report.max_ratio);
            report.witness = (x, xp);
        }
    }
    report.pass = report.max_ratio <= c;
    report
}

/// Which precondition of the distortion-radius inequality failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Precondition {
    /// `c` is not in `(0, c_0)`.
    Radius,
    /// `|x - x'|^ε >= c^3`.
    Separation,
    /// `|Df(x)|` is not in `(c, 1/c)`.
    Derivative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DistortionOutcome {
    /// Both points share a branch and `lhs <= rhs`.
    Holds { lhs: f64, rhs: f64 },
    /// The conclusion failed: different branches, or `lhs > rhs`.
    Fails { lhs: f64, rhs: f64, same_branch: bool },
    PreconditionsViolated(Precondition),
}

impl DistortionOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, DistortionOutcome::Holds { .. })
    }
}

/// If `0 < c < c_0(C, ε)`, `|x - x'|^ε < c^3` and `c < |Df(x)| < 1/c`, checks
/// that `x, x'` share a branch and `|log|Df(x)| - log|Df(x')|| <= c |x - x'|^ε / c^3`.
pub fn distortion_bound_check(
    map: &PiecewiseMap,
    x: f64,
    x_prime: f64,
    c: f64,
    holder_c: f64,
    epsilon: f64,
) -> Result<DistortionOutcome> {
    let bx = map.branch_of(x)?;
    let bxp = map.branch_of(x_prime)?;
    if !(c > 0.0 && c < c0_constant(holder_c, epsilon)) {
        return Ok(DistortionOutcome::PreconditionsViolated(Precondition::Radius));
    }
    let sep = (x - x_prime).abs().powf(epsilon);
    if sep >= c * c * c {
        return Ok(DistortionOutcome::PreconditionsViolated(Precondition::Separation));
    }
    let lx = map.log_abs_deriv(x)?;
    if !(lx > c.ln() && lx < -c.ln()) {
        return Ok(DistortionOutcome::PreconditionsViolated(Precondition::Derivative));
    }
    let rhs = c * sep / (c * c * c);
    if bx != bxp {
        return Ok(DistortionOutcome::Fails {
            lhs: f64::INFINITY,
            rhs,
            same_branch: false,
        });
    }
    let lhs = (lx - map.log_abs_deriv(x_prime)?).abs();
    Ok(if lhs <= rhs {
        DistortionOutcome::Holds { lhs, rhs }
    } else {
        DistortionOutcome::Fails {
            lhs,
            rhs,
            same_branch: true,
        }
    })
}

/// `Σ_{i<n} log|Df(f^i(x))|` with compensated summation.
pub fn log_deriv_iterate(map: &PiecewiseMap, x: f64, n: usize) -> Result<f64> {
    log_deriv_iterate_point(map, &map.point(x), n).map(|(s, _)| s)
}

/// [`log_deriv_iterate`] on an extended-precision point; also returns `f^n(x)`.
pub fn log_deriv_iterate_point(map: &PiecewiseMap, x: &Point, n: usize) -> Result<(f64, Point)> {
    let mut sum = CompensatedSum::new();
    let mut p = *x;
    for index in 0..n {
        let (next, ld, _) = map.step(&p).map_err(|_| Error::OrbitBreak {
            index,
            reason: format!("{} is not in any branch", p.x()),
        })?;
        if !ld.is_finite() {
            return Err(Error::OrbitBreak {
                index,
                reason: format!("derivative at {} is {}", p.x(), ld.exp()),
            });
        }
        sum.add(ld);
        p = next;
    }
    Ok((sum.value(), p))
}

/// Outcome of the higher-derivative growth condition on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrReport {
    pub pass: bool,
    /// Largest `|D^i f|` where `|Df| <= 2`.
    pub max_small: f64,
    /// Largest `|D^i f| / |Df|^p` where `|Df| >= 2`.
    pub max_large_ratio: f64,
    pub checked: usize,
    /// Grid points whose difference stencil left the branch or produced non-finite values.
    pub skipped: usize,
}

/// Finite-difference step `max(1e-6, 1e-4 |x|)`.
pub fn fd_step(x: f64) -> f64 {
    1e-6f64.max(1e-4 * x.abs())
}

/// `D^order f` from the closed-form first derivative by nested Richardson differences.
pub fn higher_derivative<F: Fn(f64) -> f64 + Copy>(df: F, x: f64, order: usize, h: f64) -> f64 {
    if order <= 1 {
        df(x)
    } else {
        richardson_derivative(|y| higher_derivative(df, y, order - 1, h), x, h)
    }
}

/// Checks `|D^i f| < C` where `0 < |Df| <= 2` and `|D^i f| / |Df|^p < C` where
/// `|Df| >= 2`, for `2 <= i <= r`, on `grid`.
pub fn cr_ratio_check(map: &PiecewiseMap, r: usize, p: f64, c: f64, grid: &[f64]) -> Result<CrReport> {
    if r < 2 || p <= 1.0 {
        return Err(Error::Domain(format!("need r >= 2 and p > 1, got r = {r}, p = {p}")));
    }
    let mut report = CrReport {
        pass: true,
        max_small: 0.0,
        max_large_ratio: 0.0,
        checked: 0,
        skipped: 0,
    };
    for &x in grid {
        let bi = map.branch_of(x)?;
        let br = &map.branches()[bi];
        let h = fd_step(x);
        // nested stencils reach r - 1 steps of size h on either side
        let reach = h * (r - 1) as f64;
        if !(br.domain().contains(x - reach) && br.domain().contains(x + reach)) {
            report.skipped += 1;
            continue;
        }
        let df = |y: f64| br.deriv(y);
        let d1 = df(x).abs();
        let derivs: Vec<f64> = (2..=r).map(|i| higher_derivative(df, x, i, h)).collect();
        if d1 == 0.0 || !d1.is_finite() || derivs.iter().any(|d| !d.is_finite()) {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        for d in derivs {
            if d1 <= 2.0 {
                report.max_small = report.max_small.max(d.abs());
            }
            if d1 >= 2.0 {
                report.max_large_ratio = report.max_large_ratio.max(d.abs() / d1.powf(p));
            }
        }
    }
    report.pass = report.max_small < c && report.max_large_ratio < c;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c0_examples() {
        assert!((c0_constant(1.0, 1.0) - 0.495).abs() < 1e-15);
        assert!((c0_constant(10.0, 0.5) - 0.0495).abs() < 1e-15);
        let small = c0_constant(0.01, 1.0);
        assert!((small - 0.99 * 0.99 * LN_2).abs() < 1e-15);
        assert!((small - 0.6794).abs() < 1e-4);
        for c in [0.01, 1.0, 10.0] {
            let c0 = c0_constant(c, 1.0);
            assert!(c0 > 0.0 && c0 < LN_2 && c * c0 < 0.5);
        }
    }

    #[test]
    fn a0_satisfies_log_inequality() {
        for k in 1..1000 {
            let a = A0 * k as f64 / 1000.0;
            assert!((1.0 - a / 2.0).ln() > -a);
        }
    }

    #[test]
    fn tent_holder_ratios_vanish() {
        let tent = PiecewiseMap::tent();
        for br in tent.branches() {
            let (small, large) = holder_check(br, 1.0, 1.0, 1000, 3);
            assert_eq!(small.max_ratio, 0.0);
            assert_eq!(large.max_ratio, 0.0);
            assert!(small.pass && large.pass);
        }
    }

    #[test]
    fn f_alpha_lipschitz_near_zero() {
        let f = PiecewiseMap::f_alpha(1.0).unwrap();
        let window = OpenInterval::new(1e-6, 0.2).unwrap();
        let (small, _) = holder_check_on(&f.branches()[0], window, 10.0, 1.0, 20_000, 5);
        assert!(!small.regime_empty);
        assert!(small.pass, "{small:?}");
    }

    #[test]
    fn empty_regime_is_flagged() {
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        // near the turning point |Dg| is tiny, so the large-derivative regime is empty
        let window = OpenInterval::new(0.499, 0.49999).unwrap();
        let (_, large) = holder_check_on(&g.branches()[0], window, 1.0, 1.0, 1000, 1);
        assert!(large.regime_empty && large.max_ratio == 0.0);
    }

    #[test]
    fn distortion_examples() {
        let tent = PiecewiseMap::tent();
        let out = distortion_bound_check(&tent, 0.3, 0.3 + 1e-4, 0.1, 1.0, 1.0).unwrap();
        match out {
            DistortionOutcome::Holds { lhs, rhs } => {
                assert_eq!(lhs, 0.0);
                assert!((rhs - 0.01).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        assert!(distortion_bound_check(&g, 0.4, 0.4 + 1e-6, 0.1, 1.0, 1.0).unwrap().holds());
        assert_eq!(
            distortion_bound_check(&g, 0.4, 0.4 + 1e-6, 0.9, 1.0, 1.0).unwrap(),
            DistortionOutcome::PreconditionsViolated(Precondition::Radius)
        );
        assert!(matches!(
            distortion_bound_check(&g, 0.5, 0.4, 0.1, 1.0, 1.0),
            Err(Error::UndefinedPoint(_))
        ));
    }

    #[test]
    fn iterate_examples() {
        let tent = PiecewiseMap::tent();
        assert!((log_deriv_iterate(&tent, 0.3, 10).unwrap() - 10.0 * LN_2).abs() < 1e-13);
        assert!(matches!(
            log_deriv_iterate(&tent, 0.5, 2),
            Err(Error::OrbitBreak { index: 0, .. })
        ));
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        let mut x = 0.3;
        let mut product = 1.0;
        for _ in 0..3 {
            product *= g.deriv(x).unwrap().abs();
            x = g.eval(x).unwrap();
        }
        assert!((log_deriv_iterate(&g, 0.3, 3).unwrap() - product.ln()).abs() < 1e-10);
    }

    #[test]
    fn cr_checks() {
        let tent = PiecewiseMap::tent();
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).filter(|&x| x != 0.5).collect();
        let rep = cr_ratio_check(&tent, 3, 2.0, 1e-9, &grid).unwrap();
        assert!(rep.pass && rep.max_small == 0.0 && rep.max_large_ratio < 1e-9, "{rep:?}");

        let f = PiecewiseMap::f_alpha(1.0).unwrap();
        let near_zero: Vec<f64> = (1..60).map(|i| 0.2 * i as f64 / 60.0).collect();
        let rep = cr_ratio_check(&f, 2, 3.0, 10.0, &near_zero).unwrap();
        assert!(rep.pass && rep.checked > 50, "{rep:?}");
        assert!(cr_ratio_check(&f, 1, 3.0, 1.0, &near_zero).is_err());
    }
}
