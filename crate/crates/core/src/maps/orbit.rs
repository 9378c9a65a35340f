use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::families::TentConjugacy;
use super::point::{OpenInterval, Point, Side};
use super::PiecewiseMap;
use crate::error::{Error, Result};

/// Iterates used to forget the starting point when no exact invariant start exists.
pub const PLAIN_BURN_IN: usize = 10_000;

/// Where an orbit starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitStart {
    At(f64),
    /// A draw from the invariant measure: exact inverse-CDF sampling for
    /// tent-conjugate maps, a uniform draw plus [`PLAIN_BURN_IN`] iterates otherwise.
    Invariant,
    /// A typical point of the Bernoulli(`p`) measure of the tent coding,
    /// `p` being the probability of symbol 1. Tent-conjugate maps only.
    Bernoulli(f64),
}

/// One orbit point with the derivative there and the branch it lies in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitPoint {
    pub point: Point,
    pub log_abs_deriv: f64,
    pub branch: usize,
}

impl OrbitPoint {
    pub fn x(&self) -> f64 {
        self.point.x()
    }
}

/// Bits fed into the doubling-map window.
#[derive(Debug, Clone)]
struct BitSource {
    prefix: Vec<bool>,
    pos: usize,
    bernoulli: Option<f64>,
    last: bool,
    rng: ChaCha8Rng,
    word: u64,
    left: u32,
}

impl BitSource {
    fn new(prefix: Vec<bool>, bernoulli: Option<f64>, seed: u64) -> Self {
        Self {
            prefix,
            pos: 0,
            bernoulli,
            last: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
            word: 0,
            left: 0,
        }
    }

    fn next(&mut self) -> bool {
        let bit = if self.pos < self.prefix.len() {
            self.pos += 1;
            self.prefix[self.pos - 1]
        } else if let Some(p) = self.bernoulli {
            // the next binary digit is the previous one flipped by the symbol
            self.last ^ self.rng.gen_bool(p)
        } else {
            if self.left == 0 {
                self.word = self.rng.gen();
                self.left = 64;
            }
            self.left -= 1;
            (self.word >> self.left) & 1 == 1
        };
        self.last = bit;
        bit
    }
}

/// Exact tent orbit through the binary expansion of a doubling-map orbit.
///
/// With `y_n = D^n(y_0)` and `b_n` the leading bit of `y_(n-1)` (`b_0 = 0`),
/// the tent orbit is `t_n = y_n` or `1 - y_n` according to `b_n`. Two 128-bit
/// words hold the next 256 bits of `y_n`, so gaps down to `2^-190` keep a full
/// 64-bit mantissa and nothing collapses to a fixed point after 55 steps.
#[derive(Debug, Clone)]
struct TentBits {
    hi: u128,
    lo: u128,
    flipped: bool,
    source: BitSource,
}

impl TentBits {
    fn new(mut source: BitSource) -> Self {
        let mut hi = 0u128;
        let mut lo = 0u128;
        for _ in 0..128 {
            hi = (hi << 1) | source.next() as u128;
        }
        for _ in 0..128 {
            lo = (lo << 1) | source.next() as u128;
        }
        Self {
            hi,
            lo,
            flipped: false,
            source,
        }
    }

    fn lead(&self) -> bool {
        self.hi >> 127 == 1
    }

    fn point(&self) -> Point {
        let lead = self.lead();
        let side = if lead == self.flipped { Side::Lo } else { Side::Hi };
        let (hi, lo) = if lead { (!self.hi, !self.lo) } else { (self.hi, self.lo) };
        let z = if hi != 0 { hi.leading_zeros() } else { 128 + lo.leading_zeros() };
        let mantissa = if z == 0 {
            (hi >> 64) as u64
        } else if z < 128 {
            (((hi << z) | (lo >> (128 - z))) >> 64) as u64
        } else if z < 256 {
            ((lo << (z - 128)) >> 64) as u64
        } else {
            0
        };
        let log_gap = (mantissa as f64).ln() - (64 + z) as f64 * LN_2;
        Point::from_log_gap(side, log_gap, OpenInterval::unit())
    }

    fn advance(&mut self) {
        self.flipped = self.lead();
        self.hi = (self.hi << 1) | (self.lo >> 127);
        self.lo = (self.lo << 1) | self.source.next() as u128;
    }
}

/// Binary digits of an `f64` in `[0, 1)`; exact, since doubling is exact.
fn binary_digits(mut t: f64) -> Vec<bool> {
    let mut out = Vec::new();
    while t > 0.0 && out.len() < 1100 {
        t *= 2.0;
        let bit = t >= 1.0;
        if bit {
            t -= 1.0;
        }
        out.push(bit);
    }
    out
}

#[derive(Debug, Clone)]
enum State {
    Tent { conj: TentConjugacy, bits: TentBits },
    Plain { point: Option<Point> },
}

/// Forward orbit of a map, yielding `x_0, x_1, ...` with `log|Df(x_n)|`.
///
/// Tent-conjugate maps are iterated exactly in the tent coordinate and mapped
/// through the conjugacy. Other maps are iterated on extended-precision points;
/// an orbit that leaves every branch yields one orbit-break error and stops.
#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    map: &'a PiecewiseMap,
    state: State,
    index: usize,
    derivatives: bool,
}

impl<'a> Orbit<'a> {
    pub fn new(map: &'a PiecewiseMap, start: OrbitStart, seed: u64) -> Result<Self> {
        let state = match (map.conjugacy(), start) {
            (Some(conj), start) => {
                let source = match start {
                    OrbitStart::At(x) => {
                        if !map.ambient().contains(x) {
                            return Err(Error::Domain(format!("start {x} outside the ambient interval")));
                        }
                        let t = conj.to_tent(&map.point(x)).x();
                        BitSource::new(binary_digits(t), None, seed)
                    }
                    OrbitStart::Invariant => BitSource::new(Vec::new(), None, seed),
                    OrbitStart::Bernoulli(p) => {
                        if !(0.0 < p && p < 1.0) {
                            return Err(Error::Domain(format!("Bernoulli parameter {p} outside (0, 1)")));
                        }
                        BitSource::new(Vec::new(), Some(p), seed)
                    }
                };
                State::Tent {
                    conj: *conj,
                    bits: TentBits::new(source),
                }
            }
            (None, OrbitStart::At(x)) => State::Plain {
                point: Some(map.point(x)),
            },
            (None, OrbitStart::Invariant) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let amb = map.ambient();
                let x = rng.gen_range(amb.lo()..amb.hi());
                let mut p = map.point(x);
                for i in 0..PLAIN_BURN_IN {
                    p = map.step(&p).map_err(|_| Error::OrbitBreak {
                        index: i,
                        reason: "burn-in left the branch domains".into(),
                    })?.0;
                }
                State::Plain { point: Some(p) }
            }
            (None, OrbitStart::Bernoulli(_)) => {
                return Err(Error::Precondition(
                    "Bernoulli starts need a map conjugate to the tent map".into(),
                ))
            }
        };
        Ok(Self {
            map,
            state,
            index: 0,
            derivatives: true,
        })
    }

    /// Skip derivative evaluation on tent-conjugate orbits; `log_abs_deriv`
    /// is then NaN.
    pub fn positions_only(mut self) -> Self {
        self.derivatives = false;
        self
    }

    /// Number of points yielded so far.
    pub fn index(&self) -> usize {
        self.index
    }
}

impl Iterator for Orbit<'_> {
    type Item = Result<OrbitPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        let index = self.index;
        let out = match &mut self.state {
            State::Tent { conj, bits } => {
                let t = bits.point();
                bits.advance();
                let branch = match t.side() {
                    Side::Lo => 0,
                    Side::Hi => 1,
                };
                let point = conj.from_tent(&t);
                let log_abs_deriv = if self.derivatives {
                    self.map.branches()[branch].log_abs_deriv_at(&point)
                } else {
                    f64::NAN
                };
                Ok(OrbitPoint {
                    point,
                    log_abs_deriv,
                    branch,
                })
            }
            State::Plain { point } => {
                let p = (*point)?;
                match self.map.step(&p) {
                    Ok((next, log_abs_deriv, branch)) => {
                        *point = Some(next);
                        Ok(OrbitPoint {
                            point: p,
                            log_abs_deriv,
                            branch,
                        })
                    }
                    Err(_) => {
                        *point = None;
                        Err(Error::OrbitBreak {
                            index,
                            reason: format!("{} is outside every branch", p.x()),
                        })
                    }
                }
            }
        };
        self.index += 1;
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_bits_follow_the_tent_map() {
        let map = PiecewiseMap::tent();
        let xs: Vec<f64> = Orbit::new(&map, OrbitStart::At(0.3), 1)
            .unwrap()
            .take(40)
            .map(|p| p.unwrap().x())
            .collect();
        let mut x = 0.3;
        for (i, &got) in xs.iter().enumerate() {
            assert!((got - x).abs() < 1e-15 * 2f64.powi(i as i32), "step {i}");
            x = super::super::tent(x).unwrap();
        }
    }

    #[test]
    fn orbit_does_not_collapse() {
        let map = PiecewiseMap::tent();
        let tail: Vec<f64> = Orbit::new(&map, OrbitStart::At(0.3), 9)
            .unwrap()
            .skip(200)
            .take(100)
            .map(|p| p.unwrap().x())
            .collect();
        let distinct = tail.iter().filter(|&&x| x != 0.0 && x != 1.0).count();
        assert_eq!(distinct, 100);
    }

    #[test]
    fn deep_gaps_keep_precision() {
        let mut bits = TentBits::new(BitSource::new(
            [vec![false; 150], vec![true, true], vec![false; 120]].concat(),
            None,
            0,
        ));
        let p = bits.point();
        assert_eq!(p.side(), Side::Lo);
        let expected = 3.0f64.ln() - 152.0 * LN_2;
        assert!((p.log_gap() - expected).abs() < 1e-12);
        bits.advance();
        assert_eq!(bits.point().side(), Side::Lo);
    }

    #[test]
    fn bernoulli_symbol_frequency() {
        let map = PiecewiseMap::tent();
        let n = 200_000;
        let ones = Orbit::new(&map, OrbitStart::Bernoulli(0.3), 4)
            .unwrap()
            .take(n)
            .filter(|p| p.as_ref().unwrap().branch == 1)
            .count();
        assert!((ones as f64 / n as f64 - 0.3).abs() < 0.005);
    }

    #[test]
    fn plain_orbit_breaks_outside_branches() {
        let map = PiecewiseMap::g_b(2.0, 1.0).unwrap();
        let mut orbit = Orbit::new(&map, OrbitStart::At(0.0), 0).unwrap();
        assert!(matches!(orbit.next(), Some(Err(Error::OrbitBreak { index: 0, .. }))));
        assert!(orbit.next().is_none());
    }
}
