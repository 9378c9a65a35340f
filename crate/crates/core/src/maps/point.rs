use std::cmp::Ordering;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open interval `(lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    lo: f64,
    hi: f64,
}

impl OpenInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn contains_interval(&self, other: &OpenInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_disjoint(&self, other: &OpenInterval) -> bool {
        self.hi <= other.lo || other.hi <= self.lo
    }

    pub fn intersect(&self, other: &OpenInterval) -> Option<OpenInterval> {
        OpenInterval::new(self.lo.max(other.lo), self.hi.min(other.hi)).ok()
    }
}

/// Which endpoint of the ambient interval a point is closer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Lo,
    Hi,
}

/// A point of an ambient interval, stored as the natural log of its distance
/// ("gap") to the nearer endpoint.
///
/// The flat families push orbits to within `exp(-1e5)` of the boundary, far
/// below what an `f64` coordinate can resolve; the gap representation keeps
/// full relative precision there. [`Point::x`] rounds to the plain coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    ambient: OpenInterval,
    side: Side,
    log_gap: f64,
}

impl Point {
    /// Point at plain coordinate `x`; `x` may equal an ambient endpoint.
    pub fn from_x(x: f64, ambient: OpenInterval) -> Self {
        let (side, gap) = if x - ambient.lo <= ambient.hi - x {
            (Side::Lo, x - ambient.lo)
        } else {
            (Side::Hi, ambient.hi - x)
        };
        Self {
            ambient,
            side,
            log_gap: gap.max(0.0).ln(),
        }
    }

    pub fn from_log_gap(side: Side, log_gap: f64, ambient: OpenInterval) -> Self {
        Self {
            ambient,
            side,
            log_gap,
        }
    }

    /// Point on the unit interval.
    pub fn unit(x: f64) -> Self {
        Self::from_x(x, OpenInterval::unit())
    }

    pub fn ambient(&self) -> OpenInterval {
        self.ambient
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn log_gap(&self) -> f64 {
        self.log_gap
    }

    pub fn gap(&self) -> f64 {
        self.log_gap.exp()
    }

    /// True when the point is an ambient endpoint.
    pub fn is_endpoint(&self) -> bool {
        self.log_gap == f64::NEG_INFINITY
    }

    pub fn x(&self) -> f64 {
        match self.side {
            Side::Lo => self.ambient.lo + self.gap(),
            Side::Hi => self.ambient.hi - self.gap(),
        }
    }

    /// The point `x + e^log_delta` (`upward`) or `x - e^log_delta`, with full
    /// relative precision when the shift is small against the gap.
    pub fn offset(&self, upward: bool, log_delta: f64) -> Point {
        if log_delta == f64::NEG_INFINITY {
            return *self;
        }
        let r = (log_delta - self.log_gap).exp();
        let away_from_end = upward == (self.side == Side::Lo);
        let half = (0.5 * self.ambient.len()).ln();
        if r < 0.25 {
            let g = if away_from_end {
                self.log_gap + r.ln_1p()
            } else {
                self.log_gap + (-r).ln_1p()
            };
            if g < half {
                return Point::from_log_gap(self.side, g, self.ambient);
            }
        }
        let d = log_delta.exp();
        Point::from_x(if upward { self.x() + d } else { self.x() - d }, self.ambient)
    }

    /// Position order; exact between points that round to the same `f64`.
    pub fn cmp_pos(&self, other: &Point) -> Ordering {
        match (self.side, other.side) {
            (Side::Lo, Side::Lo) => self.log_gap.total_cmp(&other.log_gap),
            (Side::Hi, Side::Hi) => other.log_gap.total_cmp(&self.log_gap),
            _ => self.x().total_cmp(&other.x()),
        }
    }

    pub fn lt(&self, other: &Point) -> bool {
        self.cmp_pos(other) == Ordering::Less
    }

    pub fn le(&self, other: &Point) -> bool {
        self.cmp_pos(other) != Ordering::Greater
    }

    /// `|a - b|`, computed from the gaps when both points sit near the same end.
    pub fn distance(a: &Point, b: &Point) -> f64 {
        Self::log_distance(a, b).exp()
    }

    pub fn log_distance(a: &Point, b: &Point) -> f64 {
        if a.side == b.side && a.log_gap.max(b.log_gap) < -LN_2 {
            let (big, small) = if a.log_gap >= b.log_gap {
                (a.log_gap, b.log_gap)
            } else {
                (b.log_gap, a.log_gap)
            };
            if small == big {
                return f64::NEG_INFINITY;
            }
            big + (-(small - big).exp_m1()).ln()
        } else {
            (a.x() - b.x()).abs().ln()
        }
    }

    /// The point `a + s (b - a)` for `s` in `[0, 1]`, interpolated in gap
    /// space when both ends lie on the same side.
    pub fn lerp(a: &Point, b: &Point, s: f64) -> Point {
        if a.side == b.side {
            let ga = a.log_gap;
            let gb = b.log_gap;
            if ga == f64::NEG_INFINITY || gb == f64::NEG_INFINITY {
                let g = (1.0 - s) * a.gap() + s * b.gap();
                return Point::from_log_gap(a.side, g.ln(), a.ambient);
            }
            // log((1-s) e^ga + s e^gb) with the larger exponent factored out
            let m = ga.max(gb);
            let g = m + ((1.0 - s) * (ga - m).exp() + s * (gb - m).exp()).ln();
            Point::from_log_gap(a.side, g, a.ambient)
        } else {
            Point::from_x(a.x() + s * (b.x() - a.x()), a.ambient)
        }
    }
}
