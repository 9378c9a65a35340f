use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::point::{OpenInterval, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Increasing => 1.0,
            Orientation::Decreasing => -1.0,
        }
    }

    pub fn compose(self, other: Orientation) -> Orientation {
        if self == other {
            Orientation::Increasing
        } else {
            Orientation::Decreasing
        }
    }
}

/// Limit of the signed derivative at a branch endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Zero,
    PlusInfinity,
    MinusInfinity,
    Finite,
}

/// The smooth function carried by one branch.
///
/// The `_at` variants work on extended-precision [`Point`]s; the defaults
/// round through `f64`, which is exact enough for maps whose singular
/// behaviour sits away from the ambient endpoints.
pub trait BranchFn: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;

    fn log_abs_deriv(&self, x: f64) -> f64;

    fn value_at(&self, p: &Point) -> Point {
        Point::from_x(self.value(p.x()), p.ambient())
    }

    fn log_abs_deriv_at(&self, p: &Point) -> f64 {
        self.log_abs_deriv(p.x())
    }

    /// Closed-form inverse, when one is available. `y` may be an endpoint of
    /// the closed image.
    fn inverse_at(&self, _y: &Point) -> Option<Point> {
        None
    }
}

/// One monotone branch of a piecewise map.
#[derive(Clone)]
pub struct Branch {
    domain: OpenInterval,
    orientation: Orientation,
    image: OpenInterval,
    tags: [BoundaryTag; 2],
    func: Arc<dyn BranchFn>,
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .field("image", &self.image)
            .field("tags", &self.tags)
            .field("func", &self.func)
            .finish()
    }
}

impl Branch {
    pub fn new(
        domain: OpenInterval,
        orientation: Orientation,
        image: OpenInterval,
        tags: [BoundaryTag; 2],
        func: Arc<dyn BranchFn>,
    ) -> Self {
        Self {
            domain,
            orientation,
            image,
            tags,
            func,
        }
    }

    pub fn domain(&self) -> OpenInterval {
        self.domain
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Open image `f(domain)`.
    pub fn image(&self) -> OpenInterval {
        self.image
    }

    /// Derivative tags at the left and right endpoints of the domain.
    pub fn tags(&self) -> [BoundaryTag; 2] {
        self.tags
    }

    pub fn func(&self) -> &Arc<dyn BranchFn> {
        &self.func
    }

    pub fn value(&self, x: f64) -> f64 {
        self.func.value(x)
    }

    pub fn log_abs_deriv(&self, x: f64) -> f64 {
        self.func.log_abs_deriv(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.orientation.sign() * self.func.log_abs_deriv(x).exp()
    }

    pub fn value_at(&self, p: &Point) -> Point {
        self.func.value_at(p)
    }

    pub fn log_abs_deriv_at(&self, p: &Point) -> f64 {
        self.func.log_abs_deriv_at(p)
    }

    /// One-sided limits of the branch at the left and right domain endpoints.
    pub fn endpoint_images(&self, ambient: OpenInterval) -> (Point, Point) {
        let lo = Point::from_x(self.image.lo(), ambient);
        let hi = Point::from_x(self.image.hi(), ambient);
        match self.orientation {
            Orientation::Increasing => (lo, hi),
            Orientation::Decreasing => (hi, lo),
        }
    }

    /// Image of a point of the closed domain; endpoints go to the one-sided limits.
    pub fn value_or_limit(&self, p: &Point) -> Point {
        let amb = p.ambient();
        let lo = Point::from_x(self.domain.lo(), amb);
        let hi = Point::from_x(self.domain.hi(), amb);
        let (at_lo, at_hi) = self.endpoint_images(amb);
        if p.le(&lo) {
            at_lo
        } else if hi.le(p) {
            at_hi
        } else {
            self.func.value_at(p)
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        let amb = p.ambient();
        Point::from_x(self.domain.lo(), amb).lt(p) && p.lt(&Point::from_x(self.domain.hi(), amb))
    }

    /// The unique `x` in the domain with `f(x) = y`, by bisection on the
    /// monotone branch followed by one Newton correction when it helps.
    pub fn pullback(&self, index: usize, y: f64) -> Result<f64> {
        if !self.image.contains(y) {
            return Err(Error::NoPreimage { branch: index, y });
        }
        let increasing = self.orientation == Orientation::Increasing;
        let (mut lo, mut hi) = (self.domain.lo(), self.domain.hi());
        // Bisection runs to full f64 resolution, well below 1e-14 absolute.
        for _ in 0..2200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let below = self.func.value(mid) < y;
            if below == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        let x = if self.domain.contains(x) { x } else { lo.max(self.domain.lo()).min(hi) };
        let residual = self.func.value(x) - y;
        let d = self.deriv(x);
        if d.is_finite() && d != 0.0 {
            let polished = x - residual / d;
            if self.domain.contains(polished)
                && (self.func.value(polished) - y).abs() < residual.abs()
            {
                return Ok(polished);
            }
        }
        Ok(x)
    }

    /// Preimage of an extended-precision point of the closed image.
    pub fn pullback_point(&self, index: usize, y: &Point) -> Result<Point> {
        let amb = y.ambient();
        let img_lo = Point::from_x(self.image.lo(), amb);
        let img_hi = Point::from_x(self.image.hi(), amb);
        if y.lt(&img_lo) || img_hi.lt(y) {
            return Err(Error::NoPreimage { branch: index, y: y.x() });
        }
        if let Some(p) = self.func.inverse_at(y) {
            return Ok(p);
        }
        let (at_lo, at_hi) = self.endpoint_images(amb);
        if y.cmp_pos(&at_lo).is_eq() {
            return Ok(Point::from_x(self.domain.lo(), amb));
        }
        if y.cmp_pos(&at_hi).is_eq() {
            return Ok(Point::from_x(self.domain.hi(), amb));
        }
        Ok(Point::from_x(self.pullback(index, y.x())?, amb))
    }
}

/// A branch given by plain closures, for maps outside the built-in families.
pub struct FnBranch<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    pub value: F,
    pub log_abs_deriv: G,
}

impl<F, G> fmt::Debug for FnBranch<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnBranch")
    }
}

impl<F, G> BranchFn for FnBranch<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn log_abs_deriv(&self, x: f64) -> f64 {
        (self.log_abs_deriv)(x)
    }
}
