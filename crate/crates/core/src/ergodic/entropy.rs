use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{OpenInterval, Orbit, OrbitStart, PiecewiseMap, Point};

/// Shift applied to orbit points that land exactly on a partition boundary.
pub const BOUNDARY_NUDGE: f64 = 1e-12;

/// `-p log p - (1 - p) log(1 - p)`.
pub fn bernoulli_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordCountEstimate {
    /// `(n, (1/n) log #distinct n-words)`.
    pub rates: Vec<(usize, f64)>,
    pub boundary_hits: usize,
    pub orbit_length: usize,
}

struct Coder {
    edges: Vec<(Point, Point)>,
}

impl Coder {
    fn new(map: &PiecewiseMap, partition: &[OpenInterval]) -> Self {
        let mut parts = partition.to_vec();
        parts.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
        let amb = map.ambient();
        Self {
            edges: parts
                .iter()
                .map(|i| (Point::from_x(i.lo(), amb), Point::from_x(i.hi(), amb)))
                .collect(),
        }
    }

    fn symbol(&self, p: &Point) -> Option<usize> {
        let i = self.edges.partition_point(|(lo, _)| lo.lt(p));
        if i == 0 {
            return None;
        }
        let (_, hi) = &self.edges[i - 1];
        p.lt(hi).then_some(i - 1)
    }
}

/// Counts distinct itinerary words of each length along one orbit.
///
/// Itineraries use the partition in increasing order; a point on a partition
/// boundary is moved right by [`BOUNDARY_NUDGE`] and counted in `boundary_hits`.
pub fn entropy_word_count(
    map: &PiecewiseMap,
    partition: &[OpenInterval],
    start: OrbitStart,
    orbit_length: usize,
    word_lengths: &[usize],
    seed: u64,
) -> Result<WordCountEstimate> {
    if partition.is_empty() {
        return Err(Error::Precondition("empty partition".into()));
    }
    let bits = usize::BITS - (partition.len() - 1).max(1).leading_zeros();
    let longest = word_lengths.iter().copied().max().unwrap_or(0);
    if longest * bits as usize > 128 || word_lengths.contains(&0) {
        return Err(Error::Domain(format!(
            "word lengths must be in 1..={} for {} symbols",
            128 / bits,
            partition.len()
        )));
    }
    let coder = Coder::new(map, partition);
    let mut symbols = Vec::with_capacity(orbit_length);
    let mut boundary_hits = 0;
    for item in Orbit::new(map, start, seed)?.positions_only().take(orbit_length) {
        let p = item?.point;
        let s = match coder.symbol(&p) {
            Some(s) => s,
            None => {
                boundary_hits += 1;
                coder.symbol(&map.point(p.x() + BOUNDARY_NUDGE)).ok_or_else(|| {
                    Error::Precondition(format!("partition does not cover {}", p.x()))
                })?
            }
        };
        symbols.push(s as u128);
    }
    let rates = word_lengths
        .iter()
        .map(|&n| {
            let mask = if n * bits as usize >= 128 {
                u128::MAX
            } else {
                (1u128 << (n * bits as usize)) - 1
            };
            let mut seen = HashSet::with_capacity(symbols.len().min(1 << 22));
            let mut code = 0u128;
            for (i, &s) in symbols.iter().enumerate() {
                code = ((code << bits) | s) & mask;
                if i + 1 >= n {
                    seen.insert(code);
                }
            }
            (n, (seen.len().max(1) as f64).ln() / n as f64)
        })
        .collect();
    Ok(WordCountEstimate {
        rates,
        boundary_hits,
        orbit_length,
    })
}

/// Midpoints of random tent cylinders whose symbols are i.i.d. with `P(1) = p`.
///
/// The returned values are tent coordinates; the symbol string `s` fixes the
/// binary digits `a_(i+1) = a_i XOR s_i` of the cylinder, whose midpoint is
/// `0.a_1 ... a_depth 1` (digits past the 52nd are dropped).
pub fn sample_bernoulli_measure(p: f64, depth: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("Bernoulli parameter {p} outside (0, 1)")));
    }
    if depth == 0 {
        return Err(Error::Domain("cylinder depth must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept = depth.min(52);
    Ok((0..count)
        .map(|_| {
            let mut digit = false;
            let mut num: u64 = 0;
            for i in 0..depth {
                digit ^= rng.gen_bool(p);
                if i < kept {
                    num = (num << 1) | digit as u64;
                }
            }
            num = (num << 1) | 1;
            num as f64 * (-(kept as f64 + 1.0)).exp2()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;

    fn halves() -> Vec<OpenInterval> {
        vec![OpenInterval::new(0.0, 0.5).unwrap(), OpenInterval::new(0.5, 1.0).unwrap()]
    }

    #[test]
    fn entropy_of_bernoulli() {
        assert!((bernoulli_entropy(0.3) - 0.6109).abs() < 1e-4);
        assert!((bernoulli_entropy(0.5) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn tent_short_words_are_all_present() {
        let tent = PiecewiseMap::tent();
        let est = entropy_word_count(&tent, &halves(), OrbitStart::Invariant, 200_000, &[4, 8, 12], 1).unwrap();
        for (_, r) in est.rates {
            assert!((r - LN_2).abs() < 1e-12);
        }
        assert_eq!(est.boundary_hits, 0);
    }

    #[test]
    fn boundary_hits_are_nudged() {
        use std::sync::Arc;

        use crate::maps::{BoundaryTag, Branch, FnBranch, MapKind, Orientation};
        // x -> x/2 + 1/4 fixes the partition boundary 1/2
        let unit = OpenInterval::unit();
        let branch = Branch::new(
            unit,
            Orientation::Increasing,
            OpenInterval::new(0.25, 0.75).unwrap(),
            [BoundaryTag::Finite; 2],
            Arc::new(FnBranch {
                value: |x: f64| 0.5 * x + 0.25,
                log_abs_deriv: |_| -LN_2,
            }),
        );
        let map = PiecewiseMap::new("contraction", unit, vec![branch], MapKind::Plain).unwrap();
        let est = entropy_word_count(&map, &halves(), OrbitStart::At(0.5), 100, &[1, 5], 0).unwrap();
        assert_eq!(est.boundary_hits, 100);
        assert_eq!(est.rates, vec![(1, 0.0), (5, 0.0)]);
    }

    #[test]
    fn bernoulli_cylinders() {
        let xs = sample_bernoulli_measure(0.5, 50, 100_000, 2).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let ks = sorted
            .iter()
            .enumerate()
            .map(|(i, x)| ((i + 1) as f64 / sorted.len() as f64 - x).abs())
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS {ks}");
        let xs = sample_bernoulli_measure(0.3, 50, 100_000, 3).unwrap();
        let low = xs.iter().filter(|&&x| x < 0.5).count() as f64 / xs.len() as f64;
        assert!((low - 0.7).abs() < 0.01);
        assert!(sample_bernoulli_measure(1.0, 50, 1, 0).is_err());
    }

    #[test]
    fn equal_prefixes_coincide() {
        // same seed: the first sample shares its first 50 symbols across depths
        let a = sample_bernoulli_measure(0.3, 50, 1, 11).unwrap();
        let b = sample_bernoulli_measure(0.3, 52, 1, 11).unwrap();
        assert!((a[0] - b[0]).abs() <= (-50f64).exp2());
    }
}
