use serde::Serialize;

use super::build::{pull_through, InducedMarkovMap};
use crate::ergodic::DensityEstimate;
use crate::error::{Error, Result};
use crate::maps::{OpenInterval, PiecewiseMap, Point};
use crate::numeric::CompensatedSum;

/// Successive sweeps closer than this in L1 stop the iteration.
const CONVERGENCE_L1: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferResult {
    pub density: DensityEstimate,
    pub converged: bool,
    /// L1 change of the last sweep.
    pub last_change: f64,
    /// Mass lost to the residual set in the last sweep, before renormalizing.
    pub escaped_mass: f64,
    pub iterations: usize,
}

/// Distribution function of a piecewise-constant density.
struct Cdf<'a> {
    est: &'a DensityEstimate,
    prefix: Vec<f64>,
}

impl<'a> Cdf<'a> {
    fn new(est: &'a DensityEstimate) -> Self {
        let mut prefix = Vec::with_capacity(est.bin_count + 1);
        let mut acc = CompensatedSum::new();
        prefix.push(0.0);
        for &m in &est.bin_masses {
            acc.add(m);
            prefix.push(acc.value());
        }
        Self { est, prefix }
    }

    fn at(&self, x: f64) -> f64 {
        let iv = self.est.interval;
        if x <= iv.lo() {
            return 0.0;
        }
        if x >= iv.hi() {
            return self.prefix[self.est.bin_count];
        }
        let k = self.est.bin_of(x);
        let (lo, hi) = self.est.edges(k);
        self.prefix[k] + self.est.bin_masses[k] * ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        (self.at(b) - self.at(a)).max(0.0)
    }
}

fn edge_points(iv: OpenInterval, bins: usize, ambient: OpenInterval) -> Vec<Point> {
    let w = iv.len() / bins as f64;
    (0..=bins)
        .map(|k| {
            let x = if k == bins { iv.hi() } else { iv.lo() + k as f64 * w };
            Point::from_x(x, ambient)
        })
        .collect()
}

/// Spreads `len` units of `[s, t]` over the bins of width `w` starting at `lo`.
fn deposit(row: &mut Vec<(usize, f64)>, lo: f64, w: f64, bins: usize, s: f64, t: f64, weight: f64) {
    if t <= s {
        return;
    }
    let first = (((s - lo) / w).floor().max(0.0) as usize).min(bins - 1);
    let last = (((t - lo) / w).floor().max(0.0) as usize).min(bins - 1);
    for a in first..=last {
        let a_lo = lo + a as f64 * w;
        let overlap = t.min(a_lo + w) - s.max(a_lo);
        if overlap > 0.0 {
            row.push((a, weight * overlap / w));
        }
    }
}

/// Invariant density of the induced map on `U` by Ulam's method.
///
/// The transfer operator is projected onto `bins` piecewise-constant cells:
/// cell `a` sends to cell `c` the fraction of its length that `φ` maps into
/// `c`, computed by pulling the edges of `c` back along each branch. Starting
/// from the uniform density, sweeps are renormalized until the L1 change
/// drops below `1e-10` or `iterations` is reached.
pub fn transfer_density(imm: &InducedMarkovMap, bins: usize, iterations: usize) -> Result<TransferResult> {
    if bins == 0 || iterations == 0 {
        return Err(Error::Domain("transfer needs at least one bin and one sweep".into()));
    }
    if imm.branches.is_empty() {
        return Err(Error::EmptyInducedMap(imm.max_depth));
    }
    if !(imm.lambda_min > 1.0) {
        return Err(Error::Precondition(format!(
            "induced map is not expanding (lambda_min = {})",
            imm.lambda_min
        )));
    }
    let u = imm.u;
    let amb = imm.map.ambient();
    let w = u.len() / bins as f64;
    let edges = edge_points(u, bins, amb);
    // rows[a]: (c, fraction of cell a landing in cell c)
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); bins];
    for br in &imm.branches {
        let pulled: Vec<f64> = edges
            .iter()
            .map(|e| pull_through(&imm.map, &br.itinerary, *e, *e).map(|(p, _)| p.x()))
            .collect::<Result<_>>()?;
        let mut tmp = Vec::new();
        for c in 0..bins {
            let (s, t) = if pulled[c] <= pulled[c + 1] {
                (pulled[c], pulled[c + 1])
            } else {
                (pulled[c + 1], pulled[c])
            };
            tmp.clear();
            deposit(&mut tmp, u.lo(), w, bins, s, t, 1.0);
            for &(a, frac) in &tmp {
                rows[a].push((c, frac));
            }
        }
    }

    let mut m = vec![1.0 / bins as f64; bins];
    let mut last_change = f64::INFINITY;
    let mut escaped = 0.0;
    let mut done = 0;
    for it in 1..=iterations {
        let mut next = vec![0.0; bins];
        for (a, row) in rows.iter().enumerate() {
            for &(c, p) in row {
                next[c] += m[a] * p;
            }
        }
        let total = next.iter().copied().collect::<CompensatedSum>().value();
        if total <= 0.0 {
            return Err(Error::Precondition("all mass escaped to the residual set".into()));
        }
        escaped = 1.0 - total;
        next.iter_mut().for_each(|v| *v /= total);
        last_change = next.iter().zip(&m).map(|(a, b)| (a - b).abs()).sum();
        m = next;
        done = it;
        if last_change < CONVERGENCE_L1 {
            break;
        }
    }
    Ok(TransferResult {
        density: DensityEstimate::from_weights(u, m, 0)?,
        converged: last_change < CONVERGENCE_L1,
        last_change,
        escaped_mass: escaped,
        iterations: done,
    })
}

/// Pushes `ν` forward along the tower, `Σ_i Σ_{j<n_i} f^j_* ν|U_i`, and
/// normalizes it to a probability density on `bins` ambient cells.
///
/// Cell masses come from pulling the cell edges inside `f^j(U_i)` back to
/// `U_i` and reading them off the distribution function of `ν`.
pub fn spread_measure(imm: &InducedMarkovMap, nu: &DensityEstimate, bins: usize) -> Result<DensityEstimate> {
    if bins == 0 {
        return Err(Error::Domain("spreading needs at least one bin".into()));
    }
    if (nu.interval.lo() - imm.u.lo()).abs() > 1e-12 || (nu.interval.hi() - imm.u.hi()).abs() > 1e-12 {
        return Err(Error::Domain("the density to spread must live on U".into()));
    }
    let map = &imm.map;
    let amb = map.ambient();
    let cdf = Cdf::new(nu);
    let edges = edge_points(amb, bins, amb);
    let w = amb.len() / bins as f64;
    let mut weights = vec![CompensatedSum::new(); bins];
    for br in &imm.branches {
        let (mut lo, mut hi) = (br.lo, br.hi);
        for j in 0..br.return_time {
            let prefix = &br.itinerary[..j];
            let first = ((lo.x() - amb.lo()) / w).floor().max(0.0) as usize;
            let last = (((hi.x() - amb.lo()) / w).ceil() as usize).min(bins);
            // consecutive cut points of f^j(U_i) at the cell edges
            let mut cuts = vec![lo];
            cuts.extend(edges[first..=last].iter().filter(|e| lo.lt(e) && e.lt(&hi)));
            cuts.push(hi);
            let pulled: Vec<f64> = cuts
                .iter()
                .map(|c| pull_through(map, prefix, *c, *c).map(|(p, _)| p.x()))
                .collect::<Result<_>>()?;
            for k in 0..cuts.len() - 1 {
                let (s, t) = if pulled[k] <= pulled[k + 1] {
                    (pulled[k], pulled[k + 1])
                } else {
                    (pulled[k + 1], pulled[k])
                };
                let mid = Point::lerp(&cuts[k], &cuts[k + 1], 0.5).x();
                let cell = (((mid - amb.lo()) / w) as usize).min(bins - 1);
                weights[cell].add(cdf.mass(s.max(br.lo.x()), t.min(br.hi.x())));
            }
            let b = map.branches().get(br.itinerary[j]).ok_or(Error::Domain("bad itinerary".into()))?;
            let (a, c) = (b.value_or_limit(&lo), b.value_or_limit(&hi));
            (lo, hi) = if a.lt(&c) { (a, c) } else { (c, a) };
        }
    }
    DensityEstimate::from_weights(amb, weights.iter().map(CompensatedSum::value).collect(), 0)
}

/// One step of the ambient transfer operator applied to a binned density.
pub fn transfer_step(map: &PiecewiseMap, est: &DensityEstimate) -> Result<DensityEstimate> {
    let amb = map.ambient();
    if est.interval != amb {
        return Err(Error::Domain("the density must live on the ambient interval".into()));
    }
    let bins = est.bin_count;
    let cdf = Cdf::new(est);
    let edges = edge_points(amb, bins, amb);
    let mut weights = vec![CompensatedSum::new(); bins];
    for (b, br) in map.branches().iter().enumerate() {
        let img = br.image();
        for c in 0..bins {
            let (lo, hi) = (edges[c].x().max(img.lo()), edges[c + 1].x().min(img.hi()));
            if lo >= hi {
                continue;
            }
            let p = br.pullback_point(b, &Point::from_x(lo, amb))?.x();
            let q = br.pullback_point(b, &Point::from_x(hi, amb))?.x();
            weights[c].add(cdf.mass(p.min(q), p.max(q)));
        }
    }
    DensityEstimate::from_weights(amb, weights.iter().map(CompensatedSum::value).collect(), 0)
}
