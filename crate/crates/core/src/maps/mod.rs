//! Piecewise monotone interval maps and the explicit cusp-map families.

mod branch;
mod families;
mod kernel;
mod orbit;
mod point;

use serde::{Deserialize, Serialize};

pub use branch::{BoundaryTag, Branch, BranchFn, FnBranch, Orientation};
pub use families::{tent, Direction, TentConjugacy};
pub use kernel::{ConjugacyKernel, LOG_FLOOR};
pub use orbit::{Orbit, OrbitPoint, OrbitStart, PLAIN_BURN_IN};
pub use point::{OpenInterval, Point, Side};


use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    /// Every branch endpoint has derivative limit `0` or `±∞`.
    Cusp,
    Plain,
}

/// Ordered monotone branches on disjoint open subintervals of an ambient interval.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    name: String,
    ambient: OpenInterval,
    branches: Vec<Branch>,
    kind: MapKind,
    conjugacy: Option<TentConjugacy>,
}

/// Result of checking one boundary tag along a geometric approach sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagCheck {
    pub branch: usize,
    pub at_hi: bool,
    pub tag: BoundaryTag,
    pub monotone: bool,
    pub last_log_abs_deriv: f64,
}

impl PiecewiseMap {
    /// Build a map from branches, checking disjointness, containment and
    /// that each branch's derivative sign matches its orientation.
    pub fn new(
        name: impl Into<String>,
        ambient: OpenInterval,
        mut branches: Vec<Branch>,
        kind: MapKind,
    ) -> Result<Self> {
        branches.sort_by(|a, b| a.domain().lo().total_cmp(&b.domain().lo()));
        for (i, br) in branches.iter().enumerate() {
            if !ambient.contains_interval(&br.domain()) {
                return Err(Error::Precondition(format!(
                    "branch {i} domain {:?} not inside ambient {:?}",
                    br.domain(),
                    ambient
                )));
            }
            if i > 0 && branches[i - 1].domain().hi() > br.domain().lo() {
                return Err(Error::Precondition(format!("branches {} and {i} overlap", i - 1)));
            }
            let d = br.domain();
            let mut prev = None;
            for k in 1..16 {
                let x = d.lo() + d.len() * k as f64 / 16.0;
                let v = br.value(x);
                if let Some(p) = prev {
                    let step = (v - p) * br.orientation().sign();
                    if step < 0.0 {
                        return Err(Error::Precondition(format!(
                            "branch {i} is not monotone in its stated orientation"
                        )));
                    }
                }
                prev = Some(v);
            }
        }
        if kind == MapKind::Cusp {
            for br in &branches {
                if br.tags().contains(&BoundaryTag::Finite) {
                    return Err(Error::Precondition(
                        "cusp maps need zero or infinite derivative limits at every endpoint".into(),
                    ));
                }
            }
        }
        Ok(Self::from_parts(name.into(), ambient, branches, kind, None))
    }

    pub(crate) fn from_parts(
        name: String,
        ambient: OpenInterval,
        branches: Vec<Branch>,
        kind: MapKind,
        conjugacy: Option<TentConjugacy>,
    ) -> Self {
        Self {
            name,
            ambient,
            branches,
            kind,
            conjugacy,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient(&self) -> OpenInterval {
        self.ambient
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, i: usize) -> Result<&Branch> {
        self.branches
            .get(i)
            .ok_or_else(|| Error::Domain(format!("no branch with index {i}")))
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// The tent conjugacy, for the families built on one.
    pub fn conjugacy(&self) -> Option<&TentConjugacy> {
        self.conjugacy.as_ref()
    }

    /// Extended-precision point at coordinate `x`.
    pub fn point(&self, x: f64) -> Point {
        Point::from_x(x, self.ambient)
    }

    pub fn branch_of(&self, x: f64) -> Result<usize> {
        self.branches
            .iter()
            .position(|b| b.domain().contains(x))
            .ok_or(Error::UndefinedPoint(x))
    }

    pub fn branch_of_point(&self, p: &Point) -> Result<usize> {
        self.branches
            .iter()
            .position(|b| b.contains(p))
            .ok_or_else(|| Error::UndefinedPoint(p.x()))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let i = self.branch_of(x)?;
        Ok(self.branches[i].value(x))
    }

    /// Signed derivative.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        let i = self.branch_of(x)?;
        Ok(self.branches[i].deriv(x))
    }

    pub fn log_abs_deriv(&self, x: f64) -> Result<f64> {
        let i = self.branch_of(x)?;
        Ok(self.branches[i].log_abs_deriv(x))
    }

    /// The `x` in branch `i` with `f(x) = y`.
    pub fn pullback(&self, i: usize, y: f64) -> Result<f64> {
        self.branch(i)?.pullback(i, y)
    }

    pub fn pullback_point(&self, i: usize, y: &Point) -> Result<Point> {
        self.branch(i)?.pullback_point(i, y)
    }

    /// One step on an extended-precision point: image, `log|Df|` at the
    /// point, and the branch used.
    pub fn step(&self, p: &Point) -> Result<(Point, f64, usize)> {
        let i = self.branch_of_point(p)?;
        let br = &self.branches[i];
        Ok((br.value_at(p), br.log_abs_deriv_at(p), i))
    }

    /// Branches whose open image contains `y`.
    pub fn preimage_branches(&self, y: &Point) -> Vec<usize> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                let img = b.image();
                Point::from_x(img.lo(), self.ambient).lt(y) && y.lt(&Point::from_x(img.hi(), self.ambient))
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Check each boundary tag on the sample sequence `endpoint ± 2^-k |domain|`,
    /// `k = 4..=40`: the derivative must move monotonically toward the tag.
    pub fn verify_boundary_tags(&self) -> Vec<TagCheck> {
        let mut out = Vec::new();
        for (i, br) in self.branches.iter().enumerate() {
            let d = br.domain();
            for (at_hi, tag) in [(false, br.tags()[0]), (true, br.tags()[1])] {
                let samples: Vec<f64> = (4..=40)
                    .map(|k| {
                        let off = d.len() * (-(k as f64)).exp2();
                        let p = if at_hi {
                            Point::from_x(d.hi() - off, self.ambient)
                        } else {
                            Point::from_x(d.lo() + off, self.ambient)
                        };
                        br.log_abs_deriv_at(&p)
                    })
                    .collect();
                let sign_ok = {
                    let x = if at_hi { d.hi() - d.len() / 64.0 } else { d.lo() + d.len() / 64.0 };
                    let s = br.deriv(x).signum();
                    match tag {
                        BoundaryTag::PlusInfinity => s > 0.0,
                        BoundaryTag::MinusInfinity => s < 0.0,
                        _ => true,
                    }
                };
                let monotone = sign_ok
                    && match tag {
                        BoundaryTag::Zero => {
                            samples.windows(2).all(|w| w[1] <= w[0]) && samples[samples.len() - 1] < samples[0]
                        }
                        BoundaryTag::PlusInfinity | BoundaryTag::MinusInfinity => {
                            samples.windows(2).all(|w| w[1] >= w[0]) && samples[samples.len() - 1] > samples[0]
                        }
                        BoundaryTag::Finite => {
                            let diffs: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
                            samples.iter().all(|v| v.is_finite())
                                && diffs[diffs.len() - 1] <= diffs[0] + 1e-12
                        }
                    };
                out.push(TagCheck {
                    branch: i,
                    at_hi,
                    tag,
                    monotone,
                    last_log_abs_deriv: samples[samples.len() - 1],
                });
            }
        }
        out
    }
}
