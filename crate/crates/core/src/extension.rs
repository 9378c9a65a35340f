//! Finite backward orbits and pullbacks of intervals along them.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{OpenInterval, Orientation, PiecewiseMap, Point};
use crate::numeric::{chebyshev_points, fit_line};

/// Probe points per interval for the distortion suprema.
pub const DISTORTION_PROBES: usize = 17;
/// Smallest admissible radius before a fiber is declared degenerate.
pub const MIN_RADIUS: f64 = 1e-12;

/// How a preimage is chosen at each backward step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchPolicy {
    Uniform,
    /// Weight `ρ(w) / |Df(w)|` over the candidate preimages `w`, with `ρ`
    /// the exact invariant density; the backward chain is then stationary
    /// for the invariant measure.
    DensityWeighted,
}

/// `y_0, y_1, ..., y_n` with `f(y_(i+1)) = y_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackwardOrbit {
    pub points: Vec<Point>,
    /// `branch_indices[i]` is the branch containing `y_(i+1)`.
    pub branch_indices: Vec<usize>,
}

impl BackwardOrbit {
    pub fn len(&self) -> usize {
        self.branch_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branch_indices.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(Point::x).collect()
    }

    /// `max_i |f(y_(i+1)) - y_i|`.
    pub fn forward_error(&self, map: &PiecewiseMap) -> f64 {
        self.points
            .windows(2)
            .zip(&self.branch_indices)
            .map(|(w, &b)| Point::distance(&map.branches()[b].value_at(&w[1]), &w[0]))
            .fold(0.0, f64::max)
    }
}

/// Samples `n` backward steps from `y0`.
pub fn backward_orbit(
    map: &PiecewiseMap,
    y0: f64,
    n: usize,
    policy: BranchPolicy,
    seed: u64,
) -> Result<BackwardOrbit> {
    if !map.ambient().contains(y0) {
        return Err(Error::Domain(format!("y0 = {y0} outside the ambient interval")));
    }
    let conj = match policy {
        BranchPolicy::Uniform => None,
        BranchPolicy::DensityWeighted => Some(*map.conjugacy().ok_or_else(|| {
            Error::Precondition("density-weighted sampling needs a tent-conjugate map".into())
        })?),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n + 1);
    let mut branch_indices = Vec::with_capacity(n);
    let mut y = map.point(y0);
    points.push(y);
    for step in 0..n {
        let candidates: Vec<(usize, Point)> = map
            .preimage_branches(&y)
            .into_iter()
            .filter_map(|b| map.pullback_point(b, &y).ok().map(|w| (b, w)))
            .filter(|(b, w)| map.branches()[*b].contains(w))
            .collect();
        if candidates.is_empty() {
            return Err(Error::DeadEnd(step));
        }
        let pick = match conj {
            None => rng.gen_range(0..candidates.len()),
            Some(c) => {
                let logs: Vec<f64> = candidates
                    .iter()
                    .map(|(b, w)| c.log_density(w) - map.branches()[*b].log_abs_deriv_at(w))
                    .collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !top.is_finite() {
                    rng.gen_range(0..candidates.len())
                } else {
                    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
                    let total: f64 = weights.iter().sum();
                    let mut u = rng.gen::<f64>() * total;
                    let mut chosen = weights.len() - 1;
                    for (i, w) in weights.iter().enumerate() {
                        if u < *w {
                            chosen = i;
                            break;
                        }
                        u -= w;
                    }
                    chosen
                }
            }
        };
        let (b, w) = candidates[pick];
        branch_indices.push(b);
        points.push(w);
        y = w;
    }
    Ok(BackwardOrbit {
        points,
        branch_indices,
    })
}

/// Pullbacks `V_0 = V, V_1, ..., V_n` of an interval along a backward orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackTrace {
    /// Endpoints of each `V_i`, kept as extended-precision points.
    pub intervals: Vec<[Point; 2]>,
    /// `|V_i|`; may underflow to zero, see `log_lengths`.
    pub lengths: Vec<f64>,
    pub log_lengths: Vec<f64>,
    /// `Σ_(1 <= i <= n) sup_(x' in V_i) |log|Df(x')| - log|Df(y_i)||`.
    pub distortion_partial_sums: Vec<f64>,
    /// The interval `V_0` that pulled back along the whole orbit.
    pub admissible: OpenInterval,
    pub shrink_events: usize,
}

impl PullbackTrace {
    /// Least-squares slope of `log |V_i|` against `i`.
    pub fn log_length_slope(&self) -> Option<f64> {
        let ns: Vec<f64> = (0..self.log_lengths.len()).map(|i| i as f64).collect();
        fit_line(&ns, &self.log_lengths).map(|l| l.slope)
    }
}

/// `V_i` as the orbit point `y_i` and the logs of its distances to the two ends.
#[derive(Debug, Clone, Copy)]
struct Window {
    center: Point,
    log_below: f64,
    log_above: f64,
}

impl Window {
    fn ends(&self) -> [Point; 2] {
        [self.center.offset(false, self.log_below), self.center.offset(true, self.log_above)]
    }

    fn log_len(&self) -> f64 {
        let m = self.log_below.max(self.log_above);
        m + ((self.log_below - m).exp() + (self.log_above - m).exp()).ln()
    }

    /// Point at fraction `s` of the way from the lower to the upper end.
    fn at(&self, s: f64) -> Point {
        let m = self.log_below.max(self.log_above);
        let (a, b) = ((self.log_below - m).exp(), (self.log_above - m).exp());
        let o = s * (a + b) - a;
        if o == 0.0 {
            self.center
        } else {
            self.center.offset(o > 0.0, m + o.abs().ln())
        }
    }
}

/// Below this ratio of pulled-back radius to the distance from the nearest
/// domain endpoint, the pullback is linearized about the orbit point.
const LINEAR_RATIO: f64 = 1e-6;

fn pull_once(map: &PiecewiseMap, branch: usize, w: &Window, next: Point) -> Option<Window> {
    let br = &map.branches()[branch];
    let amb = map.ambient();
    let flip = br.orientation() == Orientation::Decreasing;
    let (below, above) = if flip {
        (w.log_above, w.log_below)
    } else {
        (w.log_below, w.log_above)
    };
    let ld = br.log_abs_deriv_at(&next);
    let scale = Point::log_distance(&next, &Point::from_x(br.domain().lo(), amb))
        .min(Point::log_distance(&next, &Point::from_x(br.domain().hi(), amb)));
    if ld.is_finite() && below.max(above) - ld < scale + LINEAR_RATIO.ln() {
        // mean value theorem, with the intermediate point refined twice
        let linear = |l: f64, upward: bool| {
            let mut out = l - ld;
            for _ in 0..2 {
                out = l - br.log_abs_deriv_at(&next.offset(upward, out - LN_2));
            }
            out
        };
        return Some(Window {
            center: next,
            log_below: linear(below, false),
            log_above: linear(above, true),
        });
    }
    let [lo, hi] = w.ends();
    let img_lo = Point::from_x(br.image().lo(), amb);
    let img_hi = Point::from_x(br.image().hi(), amb);
    if !(img_lo.lt(&lo) && hi.lt(&img_hi)) {
        return None;
    }
    let a = br.pullback_point(branch, &lo).ok()?;
    let b = br.pullback_point(branch, &hi).ok()?;
    let (a, b) = if flip { (b, a) } else { (a, b) };
    if !(a.lt(&next) && next.lt(&b)) {
        return None;
    }
    Some(Window {
        center: next,
        log_below: Point::log_distance(&a, &next),
        log_above: Point::log_distance(&next, &b),
    })
}

fn try_pullback(map: &PiecewiseMap, orbit: &BackwardOrbit, start: Window) -> Option<Vec<Window>> {
    let mut out = Vec::with_capacity(orbit.len() + 1);
    let mut cur = start;
    out.push(cur);
    for (i, &b) in orbit.branch_indices.iter().enumerate() {
        cur = pull_once(map, b, &cur, orbit.points[i + 1])?;
        out.push(cur);
    }
    Some(out)
}

/// Pulls `v` back along the branches recorded in `orbit`.
///
/// When some `V_i` does not fit inside the image of the recorded branch, `v`
/// is halved toward `y_0` and the pullback restarts.
pub fn pullback_interval(map: &PiecewiseMap, orbit: &BackwardOrbit, v: OpenInterval) -> Result<PullbackTrace> {
    if !map.ambient().contains_interval(&v) {
        return Err(Error::Domain(format!("{v:?} is not inside the ambient interval")));
    }
    let y0 = *orbit
        .points
        .first()
        .ok_or_else(|| Error::Precondition("empty backward orbit".into()))?;
    if !v.contains(y0.x()) {
        return Err(Error::Domain(format!("{v:?} does not contain y0 = {}", y0.x())));
    }
    let amb = map.ambient();
    let mut start = Window {
        center: y0,
        log_below: Point::log_distance(&Point::from_x(v.lo(), amb), &y0),
        log_above: Point::log_distance(&y0, &Point::from_x(v.hi(), amb)),
    };
    let mut shrink_events = 0;
    let windows = loop {
        if let Some(ws) = try_pullback(map, orbit, start) {
            break ws;
        }
        shrink_events += 1;
        start.log_below -= LN_2;
        start.log_above -= LN_2;
        if start.log_below.max(start.log_above) < MIN_RADIUS.ln() {
            return Err(Error::DegenerateFiber(MIN_RADIUS));
        }
    };
    let [lo, hi] = start.ends();
    let admissible = OpenInterval::new(lo.x(), hi.x())?;

    let probes = chebyshev_points(0.0, 1.0, DISTORTION_PROBES);
    let mut sum = 0.0;
    let mut distortion_partial_sums = Vec::with_capacity(windows.len());
    distortion_partial_sums.push(0.0);
    for (i, w) in windows.iter().enumerate().skip(1) {
        let br = &map.branches()[orbit.branch_indices[i - 1]];
        let at_y = br.log_abs_deriv_at(&w.center);
        let sup = probes
            .iter()
            .map(|&s| (br.log_abs_deriv_at(&w.at(s)) - at_y).abs())
            .fold(0.0, f64::max);
        sum += sup;
        distortion_partial_sums.push(sum);
    }
    let log_lengths: Vec<f64> = windows.iter().map(Window::log_len).collect();
    Ok(PullbackTrace {
        intervals: windows.iter().map(Window::ends).collect(),
        lengths: log_lengths.iter().map(|l| l.exp()).collect(),
        log_lengths,
        distortion_partial_sums,
        admissible,
        shrink_events,
    })
}
