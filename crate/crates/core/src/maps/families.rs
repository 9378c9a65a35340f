use std::f64::consts::LN_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::branch::{BoundaryTag, Branch, BranchFn, Orientation};
use super::kernel::ConjugacyKernel;
use super::point::{OpenInterval, Point, Side};
use super::{MapKind, PiecewiseMap};
use crate::error::{Error, Result};

/// The full tent map `T(x) = 2x` on `[0, 1/2]`, `2 - 2x` on `(1/2, 1]`.
pub fn tent(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("tent argument {x} outside [0, 1]")));
    }
    Ok(if x <= 0.5 { 2.0 * x } else { 2.0 - 2.0 * x })
}

/// One tent step on a unit-interval point.
///
/// `T(t)` depends only on the gap `d` of `t`: the image is `2d`. Returns the
/// image and `log(2 d / d')`, where `d'` is the gap of the image; the ratio
/// is exactly zero when the image stays on the low side.
pub(crate) fn tent_step(t: &Point) -> (Point, f64) {
    let doubled = t.log_gap() + LN_2;
    if doubled <= -LN_2 {
        (Point::from_log_gap(Side::Lo, doubled, t.ambient()), 0.0)
    } else {
        let gap = (-doubled.exp_m1()).max(0.0).ln();
        (Point::from_log_gap(Side::Hi, gap, t.ambient()), doubled - gap)
    }
}

/// Inverse branch `0` (`y / 2`) or `1` (`1 - y / 2`) of the tent map on points.
pub(crate) fn tent_inverse(branch: usize, y: &Point) -> Point {
    let log_y = match y.side() {
        Side::Lo => y.log_gap(),
        Side::Hi => (-y.gap()).ln_1p(),
    };
    let side = if branch == 0 { Side::Lo } else { Side::Hi };
    Point::from_log_gap(side, log_y - LN_2, y.ambient())
}

/// How a family is conjugated to the tent map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    /// `g = h ∘ T ∘ h^-1`: flat critical point at `1/2`, roots at `0` and `1`.
    Flat,
    /// `f = h^-1 ∘ T ∘ h`: parabolic fixed point at `0`, cusp at `1/2`.
    Parabolic,
}

/// Conjugacy `x = φ(t)` between a map and the tent map (`t` the tent coordinate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TentConjugacy {
    Identity,
    Kernel {
        kernel: ConjugacyKernel,
        direction: Direction,
    },
}

impl TentConjugacy {
    pub fn to_tent(&self, x: &Point) -> Point {
        match self {
            TentConjugacy::Identity => *x,
            TentConjugacy::Kernel { kernel, direction } => match direction {
                Direction::Flat => kernel.apply_inv(x),
                Direction::Parabolic => kernel.apply(x),
            },
        }
    }

    pub fn from_tent(&self, t: &Point) -> Point {
        match self {
            TentConjugacy::Identity => *t,
            TentConjugacy::Kernel { kernel, direction } => match direction {
                Direction::Flat => kernel.apply(t),
                Direction::Parabolic => kernel.apply_inv(t),
            },
        }
    }

    /// Log density of the pulled-back Lebesgue measure (the invariant
    /// measure of maximal entropy) at `x`.
    pub fn log_density(&self, x: &Point) -> f64 {
        match self {
            TentConjugacy::Identity => 0.0,
            TentConjugacy::Kernel { kernel, direction } => match direction {
                Direction::Flat => kernel.log_dh_inv_gap(x.log_gap()),
                Direction::Parabolic => kernel.log_dh_gap(x.log_gap()),
            },
        }
    }

    /// Cumulative distribution of the invariant measure, `φ^-1(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.to_tent(&Point::unit(x.clamp(0.0, 1.0))).x()
    }

    /// Invariant mass of `(a, b)`, exact near the endpoints.
    pub fn mass(&self, a: &Point, b: &Point) -> f64 {
        Point::distance(&self.to_tent(a), &self.to_tent(b))
    }

    /// Inverse-CDF sample from a uniform tent coordinate.
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.from_tent(&Point::unit(u)).x()
    }

    pub fn kernel(&self) -> Option<&ConjugacyKernel> {
        match self {
            TentConjugacy::Identity => None,
            TentConjugacy::Kernel { kernel, .. } => Some(kernel),
        }
    }
}

/// Branch `0` or `1` of a tent-conjugate map; the tent itself is the identity case.
#[derive(Debug, Clone, Copy)]
struct ConjugateBranch {
    conj: TentConjugacy,
}

impl BranchFn for ConjugateBranch {
    fn value(&self, x: f64) -> f64 {
        super::kernel::floored(self.value_at(&Point::unit(x)))
    }

    fn log_abs_deriv(&self, x: f64) -> f64 {
        self.log_abs_deriv_at(&Point::unit(x))
    }

    fn value_at(&self, p: &Point) -> Point {
        match self.conj {
            TentConjugacy::Identity => tent_step(p).0,
            TentConjugacy::Kernel {
                kernel,
                direction: Direction::Flat,
            } => {
                let t = kernel.apply_inv(p);
                kernel.apply(&tent_step(&t).0)
            }
            TentConjugacy::Kernel {
                kernel,
                direction: Direction::Parabolic,
            } => {
                let (side, log_out, _) = parabolic_step(&kernel, p);
                Point::from_log_gap(side, log_out, p.ambient())
            }
        }
    }

    fn log_abs_deriv_at(&self, p: &Point) -> f64 {
        match self.conj {
            TentConjugacy::Identity => LN_2,
            TentConjugacy::Kernel {
                kernel,
                direction: Direction::Flat,
            } => {
                let a = kernel.alpha();
                let lx = p.log_gap();
                let t = kernel.apply_inv(p);
                let (t1, ratio) = tent_step(&t);
                let lout = kernel.log_h_gap(t1.log_gap());
                // log Dh(t') + log 2 - log Dh(t), written so no term is
                // recomputed from a rounded value
                (lout - lx) + LN_2 + (1.0 + a) * (ratio - LN_2)
            }
            TentConjugacy::Kernel {
                kernel,
                direction: Direction::Parabolic,
            } => {
                let a = kernel.alpha();
                let (_, _, ratio_and_shift) = parabolic_step(&kernel, p);
                let (ratio, out_minus_in) = ratio_and_shift;
                ratio + (1.0 + a) * out_minus_in
            }
        }
    }
}

/// `f = h^-1 ∘ T ∘ h` on a point. Returns the side and log gap of the image
/// together with the tent ratio term and `log gap(out) - log gap(in)`.
///
/// Near `0` the composite is `x (1 - x^alpha log 2)^(-1/alpha)`; evaluating
/// `h` there produces gaps like `exp(-1e12)`, so the shift is taken from the
/// closed form instead of differencing two huge logs.
fn parabolic_step(kernel: &ConjugacyKernel, p: &Point) -> (Side, f64, (f64, f64)) {
    let a = kernel.alpha();
    let lx = p.log_gap();
    let e = (-a * lx).exp();
    let t = Point::from_log_gap(p.side(), kernel.log_k() - e, p.ambient());
    let (t1, ratio) = tent_step(&t);
    let stays_low = t1.side() == Side::Lo;
    let (s, shift) = if stays_low {
        let s = e - LN_2;
        (s, -(-LN_2 / e).ln_1p() / a)
    } else {
        let s = kernel.log_k() - t1.log_gap();
        (s, -(s.ln() + a * lx) / a)
    };
    let log_out = -s.ln() / a;
    (t1.side(), log_out, (ratio, shift))
}

/// A conjugate branch together with its closed-form inverse.
#[derive(Debug, Clone, Copy)]
struct TentLikeBranch {
    forward: ConjugateBranch,
    branch: usize,
}

impl BranchFn for TentLikeBranch {
    fn value(&self, x: f64) -> f64 {
        self.forward.value(x)
    }

    fn log_abs_deriv(&self, x: f64) -> f64 {
        self.forward.log_abs_deriv(x)
    }

    fn value_at(&self, p: &Point) -> Point {
        self.forward.value_at(p)
    }

    fn log_abs_deriv_at(&self, p: &Point) -> f64 {
        self.forward.log_abs_deriv_at(p)
    }

    fn inverse_at(&self, y: &Point) -> Option<Point> {
        let conj = self.forward.conj;
        let t = conj.to_tent(y);
        Some(conj.from_tent(&tent_inverse(self.branch, &t)))
    }
}

fn tent_like(name: &str, conj: TentConjugacy, tags: [[BoundaryTag; 2]; 2], kind: MapKind) -> PiecewiseMap {
    let unit = OpenInterval::unit();
    let halves = [
        OpenInterval::new(0.0, 0.5).unwrap(),
        OpenInterval::new(0.5, 1.0).unwrap(),
    ];
    let orient = [Orientation::Increasing, Orientation::Decreasing];
    let branches = (0..2)
        .map(|i| {
            let func = TentLikeBranch {
                forward: ConjugateBranch { conj },
                branch: i,
            };
            Branch::new(halves[i], orient[i], unit, tags[i], Arc::new(func))
        })
        .collect();
    PiecewiseMap::from_parts(name.to_string(), unit, branches, kind, Some(conj))
}

impl PiecewiseMap {
    /// The full tent map as a two-branch piecewise map.
    pub fn tent() -> Self {
        let f = BoundaryTag::Finite;
        tent_like("tent", TentConjugacy::Identity, [[f, f], [f, f]], MapKind::Plain)
    }

    /// `g_alpha = h ∘ T ∘ h^-1`: flat critical point at `1/2`, derivative
    /// poles at `0` and `1`.
    pub fn g_alpha(alpha: f64) -> Result<Self> {
        let kernel = ConjugacyKernel::new(alpha)?;
        let conj = TentConjugacy::Kernel {
            kernel,
            direction: Direction::Flat,
        };
        let tags = [
            [BoundaryTag::PlusInfinity, BoundaryTag::Zero],
            [BoundaryTag::Zero, BoundaryTag::MinusInfinity],
        ];
        Ok(tent_like(&format!("g_alpha({alpha})"), conj, tags, MapKind::Cusp))
    }

    /// `f_alpha = h^-1 ∘ T ∘ h`: parabolic fixed point at `0` (derivative
    /// limit 1, hence a plain map) and a cusp at `1/2`.
    pub fn f_alpha(alpha: f64) -> Result<Self> {
        let kernel = ConjugacyKernel::new(alpha)?;
        let conj = TentConjugacy::Kernel {
            kernel,
            direction: Direction::Parabolic,
        };
        let tags = [
            [BoundaryTag::Finite, BoundaryTag::PlusInfinity],
            [BoundaryTag::MinusInfinity, BoundaryTag::Finite],
        ];
        Ok(tent_like(&format!("f_alpha({alpha})"), conj, tags, MapKind::Plain))
    }

    /// `g_b(x) = -1 + b (1 - exp(-1 - |x|^-alpha))` on `[-1, 1]`, a symmetric
    /// unimodal map with a flat maximum `b - 1` at `0`.
    pub fn g_b(b: f64, alpha: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 2.0) {
            return Err(Error::Domain(format!("b must lie in (0, 2], got {b}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        let ambient = OpenInterval::new(-1.0, 1.0)?;
        let func = GbBranch { b, alpha };
        let at_edge = func.value(1.0);
        let image = OpenInterval::new(at_edge, b - 1.0)?;
        let f = BoundaryTag::Finite;
        let z = BoundaryTag::Zero;
        let branches = vec![
            Branch::new(
                OpenInterval::new(-1.0, 0.0)?,
                Orientation::Increasing,
                image,
                [f, z],
                Arc::new(func),
            ),
            Branch::new(
                OpenInterval::new(0.0, 1.0)?,
                Orientation::Decreasing,
                image,
                [z, f],
                Arc::new(func),
            ),
        ];
        Ok(PiecewiseMap::from_parts(
            format!("g_b({b}, {alpha})"),
            ambient,
            branches,
            MapKind::Plain,
            None,
        ))
    }
}

#[derive(Debug, Clone, Copy)]
struct GbBranch {
    b: f64,
    alpha: f64,
}

impl BranchFn for GbBranch {
    fn value(&self, x: f64) -> f64 {
        let inner = -1.0 - x.abs().powf(-self.alpha);
        -1.0 + self.b * (-inner.exp_m1())
    }

    fn log_abs_deriv(&self, x: f64) -> f64 {
        let ax = x.abs();
        (self.b * self.alpha).ln() - (1.0 + self.alpha) * ax.ln() - 1.0 - ax.powf(-self.alpha)
    }
}
