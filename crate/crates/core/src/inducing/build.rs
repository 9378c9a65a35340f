use serde::Serialize;

use super::returning::{is_regularly_returning, ReturnVerdict};
use crate::error::{Error, Result};
use crate::maps::{OpenInterval, Orientation, PiecewiseMap, Point};
use crate::numeric::{chebyshev_points, CompensatedSum};

/// Absolute tolerance for matching branch images against `∂U`.
pub const ONTO_TOLERANCE: f64 = 1e-9;
/// Return orders above this are not tried when escalating for expansion.
pub const MAX_RETURN_ORDER: usize = 64;
/// Exponent of the image-side Hölder check in [`markov_stats`].
pub const HOLDER_EXPONENT: f64 = 0.5;
/// Boundary iterates followed before building.
const RETURN_HORIZON: usize = 256;

/// One branch `φ = f^n : U_i -> U` of an induced map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedBranch {
    pub lo: Point,
    pub hi: Point,
    pub return_time: usize,
    /// Branch of `f` used at each of the `return_time` steps.
    pub itinerary: Vec<usize>,
}

impl InducedBranch {
    pub fn length(&self) -> f64 {
        Point::distance(&self.lo, &self.hi)
    }

    /// `φ(p)` and `log|Dφ(p)|`.
    pub fn apply(&self, map: &PiecewiseMap, p: &Point) -> (Point, f64) {
        let mut q = *p;
        let mut ld = CompensatedSum::new();
        for &b in &self.itinerary {
            let br = &map.branches()[b];
            ld.add(br.log_abs_deriv_at(&q));
            q = br.value_or_limit(&q);
        }
        (q, ld.value())
    }

    /// `φ^-1(y)` for `y` in the closure of `U`.
    pub fn inverse(&self, map: &PiecewiseMap, y: &Point) -> Result<Point> {
        let (p, _) = pull_through(map, &self.itinerary, *y, *y)?;
        Ok(p)
    }

    /// Orientation of `φ`.
    pub fn orientation(&self, map: &PiecewiseMap) -> Orientation {
        self.itinerary
            .iter()
            .fold(Orientation::Increasing, |o, &b| o.compose(map.branches()[b].orientation()))
    }
}

/// A full-branch induced Markov map on a nice interval `U`.
#[derive(Debug, Clone)]
pub struct InducedMarkovMap {
    pub map: PiecewiseMap,
    pub u: OpenInterval,
    /// Sorted by position.
    pub branches: Vec<InducedBranch>,
    /// `|U| - Σ |U_i|`.
    pub residual_measure: f64,
    /// Smallest `|Dφ|` over three sample points per branch.
    pub lambda_min: f64,
    pub max_depth: usize,
    pub return_order: usize,
    /// Images that met `U` without covering it; zero for nice intervals.
    pub partial_overlaps: usize,
}

/// Pull `[lo, hi]` back along an itinerary, last step first.
pub(super) fn pull_through(map: &PiecewiseMap, itinerary: &[usize], mut lo: Point, mut hi: Point) -> Result<(Point, Point)> {
    let amb = map.ambient();
    for &b in itinerary.iter().rev() {
        let br = &map.branches()[b];
        let img_lo = Point::from_x(br.image().lo(), amb);
        let img_hi = Point::from_x(br.image().hi(), amb);
        if lo.lt(&img_lo) {
            lo = img_lo;
        }
        if img_hi.lt(&hi) {
            hi = img_hi;
        }
        let a = br.pullback_point(b, &lo)?;
        let c = br.pullback_point(b, &hi)?;
        (lo, hi) = match br.orientation() {
            Orientation::Increasing => (a, c),
            Orientation::Decreasing => (c, a),
        };
    }
    Ok((lo, hi))
}

/// Images of `[lo, hi]` under each branch it meets, with the branch index.
fn split_and_step(map: &PiecewiseMap, lo: &Point, hi: &Point) -> Vec<(usize, Point, Point)> {
    let amb = map.ambient();
    let mut out = Vec::new();
    for (b, br) in map.branches().iter().enumerate() {
        let dlo = Point::from_x(br.domain().lo(), amb);
        let dhi = Point::from_x(br.domain().hi(), amb);
        let a = if lo.lt(&dlo) { dlo } else { *lo };
        let c = if dhi.lt(hi) { dhi } else { *hi };
        if !a.lt(&c) {
            continue;
        }
        let (fa, fc) = (br.value_or_limit(&a), br.value_or_limit(&c));
        let (ilo, ihi) = match br.orientation() {
            Orientation::Increasing => (fa, fc),
            Orientation::Decreasing => (fc, fa),
        };
        if ilo.lt(&ihi) {
            out.push((b, ilo, ihi));
        }
    }
    out
}

struct Piece {
    lo: Point,
    hi: Point,
    itinerary: Vec<usize>,
    returns: usize,
}

fn log_expansion(map: &PiecewiseMap, br: &InducedBranch) -> f64 {
    [0.1, 0.5, 0.9]
        .iter()
        .map(|&s| br.apply(map, &Point::lerp(&br.lo, &br.hi, s)).1)
        .fold(f64::INFINITY, f64::min)
}

impl InducedMarkovMap {
    /// Assembles an induced map from known branches, computing the residual
    /// measure and the expansion bound.
    pub fn from_branches(
        map: &PiecewiseMap,
        u: OpenInterval,
        mut branches: Vec<InducedBranch>,
        max_depth: usize,
        return_order: usize,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::EmptyInducedMap(max_depth));
        }
        branches.sort_by(|a, b| a.lo.cmp_pos(&b.lo));
        let covered = branches.iter().map(InducedBranch::length).collect::<CompensatedSum>();
        let lambda_min = branches
            .iter()
            .map(|b| log_expansion(map, b))
            .fold(f64::INFINITY, f64::min)
            .exp();
        Ok(Self {
            map: map.clone(),
            u,
            residual_measure: (u.len() - covered.value()).max(0.0),
            lambda_min,
            branches,
            max_depth,
            return_order,
            partial_overlaps: 0,
        })
    }

    /// Largest distance between `φ(∂U_i)` and `∂U` over all branches.
    pub fn onto_error(&self) -> f64 {
        let amb = self.map.ambient();
        let ulo = Point::from_x(self.u.lo(), amb);
        let uhi = Point::from_x(self.u.hi(), amb);
        self.branches
            .iter()
            .map(|b| {
                let (fa, _) = b.apply(&self.map, &b.lo);
                let (fc, _) = b.apply(&self.map, &b.hi);
                let (ilo, ihi) = if fa.lt(&fc) { (fa, fc) } else { (fc, fa) };
                Point::distance(&ilo, &ulo).max(Point::distance(&ihi, &uhi))
            })
            .fold(0.0, f64::max)
    }

    pub fn kac_sum(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.return_time as f64 * b.length())
            .collect::<CompensatedSum>()
            .value()
    }
}

fn build_once(map: &PiecewiseMap, u: OpenInterval, max_depth: usize, r: usize) -> Result<InducedMarkovMap> {
    let amb = map.ambient();
    let ulo = Point::from_x(u.lo(), amb);
    let uhi = Point::from_x(u.hi(), amb);
    let mut branches = Vec::new();
    let mut partial_overlaps = 0;
    let mut pieces = vec![Piece {
        lo: ulo,
        hi: uhi,
        itinerary: Vec::new(),
        returns: 0,
    }];
    for depth in 1..=max_depth {
        let mut next = Vec::with_capacity(pieces.len() * 2);
        for piece in &pieces {
            for (b, ilo, ihi) in split_and_step(map, &piece.lo, &piece.hi) {
                let mut itinerary = piece.itinerary.clone();
                itinerary.push(b);
                let (c, d) = (ilo.x(), ihi.x());
                if d <= u.lo() + ONTO_TOLERANCE || c >= u.hi() - ONTO_TOLERANCE {
                    next.push(Piece {
                        lo: ilo,
                        hi: ihi,
                        itinerary,
                        returns: piece.returns,
                    });
                    continue;
                }
                let covers = c <= u.lo() + ONTO_TOLERANCE && d >= u.hi() - ONTO_TOLERANCE;
                if c < u.lo() - ONTO_TOLERANCE {
                    next.push(Piece {
                        lo: ilo,
                        hi: ulo,
                        itinerary: itinerary.clone(),
                        returns: piece.returns,
                    });
                }
                if d > u.hi() + ONTO_TOLERANCE {
                    next.push(Piece {
                        lo: uhi,
                        hi: ihi,
                        itinerary: itinerary.clone(),
                        returns: piece.returns,
                    });
                }
                if !covers {
                    // the part inside U cannot map onto U; it is left unresolved
                    partial_overlaps += 1;
                    continue;
                }
                if piece.returns + 1 == r {
                    let (lo, hi) = pull_through(map, &itinerary, ulo, uhi)?;
                    branches.push(InducedBranch {
                        lo,
                        hi,
                        return_time: depth,
                        itinerary,
                    });
                } else {
                    next.push(Piece {
                        lo: ulo,
                        hi: uhi,
                        itinerary,
                        returns: piece.returns + 1,
                    });
                }
            }
        }
        pieces = next;
        if pieces.is_empty() {
            break;
        }
    }
    let mut imm = InducedMarkovMap::from_branches(map, u, branches, max_depth, r)?;
    imm.partial_overlaps = partial_overlaps;
    Ok(imm)
}

/// Induced map of `r`-th returns to a nice interval `U`, resolved up to
/// `max_depth` iterates.
///
/// Pieces of `U` are followed forward, split at branch boundaries; a piece
/// whose image covers `U` for the `r`-th time contributes the component of
/// its preimage of `U` as a branch. If the result does not expand with
/// `r = 1`, the order is doubled until it does or reaches [`MAX_RETURN_ORDER`].
pub fn build_induced(map: &PiecewiseMap, u: OpenInterval, max_depth: usize, r: usize) -> Result<InducedMarkovMap> {
    if r == 0 {
        return Err(Error::Domain("return order must be at least 1".into()));
    }
    if let ReturnVerdict::No { witness } = is_regularly_returning(map, u, RETURN_HORIZON)? {
        return Err(Error::Precondition(format!(
            "{u:?} is not regularly returning: a boundary point enters it after {witness} steps"
        )));
    }
    let mut imm = build_once(map, u, max_depth, r)?;
    if r == 1 {
        let mut order = 1;
        while imm.lambda_min <= 1.0 && order < MAX_RETURN_ORDER {
            order *= 2;
            imm = build_once(map, u, max_depth, order)?;
        }
    }
    Ok(imm)
}

/// Image-side Hölder check `|Dφ(x) - Dφ(x')| <= C |φ(x) - φ(x')|^ε` on sample pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedHolder {
    pub epsilon: f64,
    /// Largest observed ratio, an empirical lower bound for `C`.
    pub max_ratio: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovStats {
    pub branch_count: usize,
    /// `Σ n_i |U_i|`.
    pub kac_sum: f64,
    pub residual_measure: f64,
    pub lambda_min: f64,
    pub holder: InducedHolder,
}

pub fn markov_stats(imm: &InducedMarkovMap) -> MarkovStats {
    let probes = chebyshev_points(0.05, 0.95, 5);
    let mut max_ratio: f64 = 0.0;
    let mut pairs = 0;
    for br in &imm.branches {
        let samples: Vec<(Point, f64)> = probes
            .iter()
            .map(|&s| {
                let (y, ld) = br.apply(&imm.map, &Point::lerp(&br.lo, &br.hi, s));
                (y, ld.exp())
            })
            .collect();
        for i in 0..samples.len() {
            for j in i + 1..samples.len() {
                let dy = Point::distance(&samples[i].0, &samples[j].0);
                if dy > 0.0 {
                    let ratio = (samples[i].1 - samples[j].1).abs() / dy.powf(HOLDER_EXPONENT);
                    max_ratio = max_ratio.max(ratio);
                    pairs += 1;
                }
            }
        }
    }
    MarkovStats {
        branch_count: imm.branches.len(),
        kac_sum: imm.kac_sum(),
        residual_measure: imm.residual_measure,
        lambda_min: imm.lambda_min,
        holder: InducedHolder {
            epsilon: HOLDER_EXPONENT,
            max_ratio,
            pairs,
        },
    }
}

/// Connected components of `f^-j(U)` for `j = 0..=depth`, one list per `j`.
pub fn pullback_components(map: &PiecewiseMap, u: OpenInterval, depth: usize) -> Result<Vec<Vec<(Point, Point)>>> {
    let amb = map.ambient();
    let mut levels = vec![vec![(Point::from_x(u.lo(), amb), Point::from_x(u.hi(), amb))]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (lo, hi) in levels.last().into_iter().flatten() {
            for (b, br) in map.branches().iter().enumerate() {
                let img_lo = Point::from_x(br.image().lo(), amb);
                let img_hi = Point::from_x(br.image().hi(), amb);
                let a = if lo.lt(&img_lo) { img_lo } else { *lo };
                let c = if img_hi.lt(hi) { img_hi } else { *hi };
                if a.lt(&c) {
                    next.push(pull_through(map, &[b], a, c)?);
                }
            }
        }
        next.sort_by(|a, b| a.0.cmp_pos(&b.0));
        levels.push(next);
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent_u() -> OpenInterval {
        OpenInterval::new(0.4, 0.8).unwrap()
    }

    #[test]
    fn tent_first_branches() {
        let tent = PiecewiseMap::tent();
        let imm = build_induced(&tent, tent_u(), 6, 1).unwrap();
        // (0.6, 0.8) returns onto U after one step
        let b1: Vec<&InducedBranch> = imm.branches.iter().filter(|b| b.return_time == 1).collect();
        assert_eq!(b1.len(), 1);
        assert!((b1[0].lo.x() - 0.6).abs() < 1e-15 && (b1[0].hi.x() - 0.8).abs() < 1e-15);
        assert!((imm.lambda_min - 2.0).abs() < 1e-12);
        assert!(imm.onto_error() < 1e-12);
        assert_eq!(imm.partial_overlaps, 0);
    }

    #[test]
    fn residual_decreases_with_depth() {
        let tent = PiecewiseMap::tent();
        let mut last = f64::INFINITY;
        for depth in [4, 8, 12, 16] {
            let imm = build_induced(&tent, tent_u(), depth, 1).unwrap();
            assert!(imm.residual_measure <= last + 1e-15);
            last = imm.residual_measure;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn tent_markov_stats() {
        let tent = PiecewiseMap::tent();
        let imm = build_induced(&tent, tent_u(), 16, 1).unwrap();
        let s = markov_stats(&imm);
        assert!((s.kac_sum - 1.0).abs() < 0.02, "{}", s.kac_sum);
        assert!(s.residual_measure < 0.01);
        assert_eq!(s.holder.max_ratio, 0.0);
    }

    #[test]
    fn not_nice_is_rejected() {
        let tent = PiecewiseMap::tent();
        let u = OpenInterval::new(0.25, 0.75).unwrap();
        assert!(matches!(build_induced(&tent, u, 8, 1), Err(Error::Precondition(_))));
        assert!(matches!(build_induced(&tent, tent_u(), 8, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn no_branches_is_an_error() {
        let tent = PiecewiseMap::tent();
        assert!(matches!(
            InducedMarkovMap::from_branches(&tent, tent_u(), Vec::new(), 1, 1),
            Err(Error::EmptyInducedMap(_))
        ));
    }

    #[test]
    fn second_returns() {
        let tent = PiecewiseMap::tent();
        let imm = build_induced(&tent, tent_u(), 14, 2).unwrap();
        assert_eq!(imm.return_order, 2);
        assert!(imm.branches.iter().all(|b| b.return_time >= 2));
        assert!(imm.onto_error() < 1e-9);
        assert!((imm.lambda_min - 4.0).abs() < 1e-9);
    }

    #[test]
    fn components_nest_or_are_disjoint() {
        let tent = PiecewiseMap::tent();
        let levels = pullback_components(&tent, tent_u(), 8).unwrap();
        assert_eq!(levels[3].len(), 8);
        let all: Vec<(f64, f64)> = levels.iter().flatten().map(|(a, b)| (a.x(), b.x())).collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                let disjoint = a.1 <= b.0 + 1e-12 || b.1 <= a.0 + 1e-12;
                let nested = (a.0 <= b.0 + 1e-12 && b.1 <= a.1 + 1e-12) || (b.0 <= a.0 + 1e-12 && a.1 <= b.1 + 1e-12);
                assert!(disjoint || nested, "{a:?} {b:?}");
            }
        }
    }

    /// First-return components of (0.4, 0.8) for the tent map, found by
    /// scanning every dyadic cylinder on which `T^n` is affine and onto.
    fn tent_oracle(depth: usize) -> Vec<(f64, f64, usize)> {
        let inside = |x: f64| 0.4 < x && x < 0.8;
        let mut out = Vec::new();
        for n in 1..=depth {
            let h = 1.0 / (1u64 << n) as f64;
            for k in 0..1u64 << n {
                let a = k as f64 * h;
                let mut t = a;
                for _ in 0..n {
                    t = if t < 0.5 { 2.0 * t } else { 2.0 - 2.0 * t };
                }
                // T^n(a) is 0 on increasing cylinders and 1 on decreasing ones
                let (lo, hi) = if t == 0.0 { (a + 0.4 * h, a + 0.8 * h) } else { (a + 0.2 * h, a + 0.6 * h) };
                if !(0.4 <= lo && hi <= 0.8) {
                    continue;
                }
                let mut m = 0.5 * (lo + hi);
                let mut first = true;
                for _ in 1..n {
                    m = if m < 0.5 { 2.0 * m } else { 2.0 - 2.0 * m };
                    first &= !inside(m);
                }
                if first {
                    out.push((lo, hi, n));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    #[test]
    fn tent_matches_brute_force_oracle() {
        let tent = PiecewiseMap::tent();
        for depth in [1, 4, 8, 12] {
            let oracle = tent_oracle(depth);
            let imm = build_induced(&tent, tent_u(), depth, 1).unwrap();
            assert_eq!(imm.branches.len(), oracle.len(), "depth {depth}");
            for (b, (lo, hi, n)) in imm.branches.iter().zip(&oracle) {
                assert_eq!(b.return_time, *n);
                assert!((b.lo.x() - lo).abs() < 1e-12 && (b.hi.x() - hi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn return_times_agree_across_the_conjugacy() {
        let tent = PiecewiseMap::tent();
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        let conj = g.conjugacy().unwrap();
        let v = OpenInterval::new(conj.from_uniform(0.4), conj.from_uniform(0.8)).unwrap();
        let a = build_induced(&tent, tent_u(), 12, 1).unwrap();
        let b = build_induced(&g, v, 12, 1).unwrap();
        let times = |m: &InducedMarkovMap| {
            let mut t: Vec<usize> = m.branches.iter().map(|b| b.return_time).collect();
            t.sort_unstable();
            t
        };
        assert_eq!(times(&a), times(&b));
        assert!(b.onto_error() < ONTO_TOLERANCE);
        assert!(b.lambda_min > 1.0);
    }
}
