use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{OpenInterval, PiecewiseMap, Point};

/// Two boundary iterates closer than this count as the same point.
pub const RETURN_TOLERANCE: f64 = 1e-12;

/// Periodic points of period dividing `k` of the tent map, sorted.
///
/// On each of the `2^k` itineraries `T^k` is affine with slope `±2^k`, so the
/// fixed point is a rational `b / (1 - a)`; the itinerary is checked in exact
/// integer arithmetic.
pub fn tent_periodic_points(k: u32) -> Result<Vec<f64>> {
    if !(1..=24).contains(&k) {
        return Err(Error::Domain(format!("period {k} outside 1..=24")));
    }
    let mut out = Vec::new();
    for word in 0u32..(1 << k) {
        let symbol = |i: u32| (word >> (k - 1 - i)) & 1 == 1;
        let (mut a, mut b) = (1i128, 0i128);
        for i in 0..k {
            if symbol(i) {
                a = -2 * a;
                b = 2 - 2 * b;
            } else {
                a *= 2;
                b *= 2;
            }
        }
        // x = b / (1 - a); walk the orbit as numerators over `den`
        let den = 1 - a;
        let (num, den) = if den < 0 { (-b, -den) } else { (b, den) };
        let mut x = num;
        let mut ok = true;
        for i in 0..k {
            let upper = 2 * x >= den;
            let lower = 2 * x <= den;
            if (symbol(i) && !upper) || (!symbol(i) && !lower) {
                ok = false;
                break;
            }
            x = if symbol(i) { 2 * den - 2 * x } else { 2 * x };
        }
        if ok && x == num {
            out.push(num as f64 / den as f64);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < RETURN_TOLERANCE);
    Ok(out)
}

/// Periodic points of period dividing `k` of a tent-conjugate map.
pub fn periodic_points(map: &PiecewiseMap, k: u32) -> Result<Vec<f64>> {
    let conj = map
        .conjugacy()
        .ok_or_else(|| Error::Precondition("periodic points need a tent-conjugate map".into()))?;
    let mut out: Vec<f64> = tent_periodic_points(k)?
        .into_iter()
        .map(|t| conj.from_tent(&Point::unit(t)).x())
        .collect();
    out.dedup_by(|a, b| (*a - *b).abs() < RETURN_TOLERANCE);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReturnVerdict {
    /// Both boundary orbits end in a cycle (or leave the map) without entering `U`.
    Certified,
    /// No boundary iterate entered `U` within the horizon.
    UpToHorizon,
    /// `f^witness` of a boundary point lies in `U`.
    No { witness: usize },
}

enum BoundaryFate {
    Closed,
    Open,
    Enters(usize),
}

fn follow(map: &PiecewiseMap, u: OpenInterval, start: Point, horizon: usize) -> BoundaryFate {
    let inside = |p: &Point| {
        let x = p.x();
        u.lo() + RETURN_TOLERANCE < x && x < u.hi() - RETURN_TOLERANCE
    };
    let mut seen = vec![start];
    let mut p = start;
    for n in 1..=horizon {
        p = match map.step(&p) {
            Ok((next, _, _)) => next,
            // the orbit stops at an undefined point and never comes back
            Err(_) => return BoundaryFate::Closed,
        };
        if inside(&p) {
            return BoundaryFate::Enters(n);
        }
        if seen.iter().any(|q| Point::distance(q, &p) < RETURN_TOLERANCE) {
            return BoundaryFate::Closed;
        }
        seen.push(p);
    }
    BoundaryFate::Open
}

/// Checks `f^n(∂U) ∩ U = ∅` for `n >= 1` by following both boundary orbits.
pub fn is_regularly_returning(map: &PiecewiseMap, u: OpenInterval, horizon: usize) -> Result<ReturnVerdict> {
    if !map.ambient().contains_interval(&u) {
        return Err(Error::Domain(format!("{u:?} is not inside the ambient interval")));
    }
    let amb = map.ambient();
    let fates = [u.lo(), u.hi()].map(|x| follow(map, u, Point::from_x(x, amb), horizon));
    let witness = fates
        .iter()
        .filter_map(|f| match f {
            BoundaryFate::Enters(n) => Some(*n),
            _ => None,
        })
        .min();
    Ok(match witness {
        Some(n) => ReturnVerdict::No { witness: n },
        None if fates.iter().all(|f| matches!(f, BoundaryFate::Closed)) => ReturnVerdict::Certified,
        None => ReturnVerdict::UpToHorizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::log_deriv_iterate;

    #[test]
    fn tent_small_periods() {
        assert_eq!(tent_periodic_points(1).unwrap(), vec![0.0, 2.0 / 3.0]);
        let p2 = tent_periodic_points(2).unwrap();
        let expected = [0.0, 0.4, 2.0 / 3.0, 0.8];
        assert_eq!(p2.len(), 4);
        for (a, b) in p2.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn tent_point_counts() {
        // T^k has 2^k fixed points, all distinct
        for k in 1..=12 {
            assert_eq!(tent_periodic_points(k).unwrap().len(), 1 << k, "k {k}");
        }
        assert!(tent_periodic_points(0).is_err());
        assert!(tent_periodic_points(25).is_err());
    }

    #[test]
    fn g_half_points_are_periodic() {
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        for k in 1..=6 {
            for x in periodic_points(&g, k).unwrap() {
                if x == 0.0 {
                    continue;
                }
                let mut y = x;
                for _ in 0..k {
                    y = g.eval(y).unwrap();
                }
                assert!((y - x).abs() < 1e-10, "k {k} x {x}");
                let ld = log_deriv_iterate(&g, x, k as usize).unwrap();
                assert!((ld / (k as f64 * std::f64::consts::LN_2) - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn returning_examples() {
        let tent = PiecewiseMap::tent();
        let nice = OpenInterval::new(0.4, 0.8).unwrap();
        assert_eq!(is_regularly_returning(&tent, nice, 64).unwrap(), ReturnVerdict::Certified);
        let bad = OpenInterval::new(0.25, 0.75).unwrap();
        assert_eq!(
            is_regularly_returning(&tent, bad, 64).unwrap(),
            ReturnVerdict::No { witness: 1 }
        );
        let g = PiecewiseMap::g_alpha(0.5).unwrap();
        let conj = g.conjugacy().unwrap();
        let u = OpenInterval::new(conj.from_uniform(0.4), conj.from_uniform(0.8)).unwrap();
        assert_eq!(is_regularly_returning(&g, u, 64).unwrap(), ReturnVerdict::Certified);
    }

    #[test]
    fn horizon_only_verdict() {
        // neither boundary orbit cycles or enters the interval in three steps
        let tent = PiecewiseMap::tent();
        let u = OpenInterval::new(0.3183, 0.3184).unwrap();
        let v = is_regularly_returning(&tent, u, 3).unwrap();
        assert_eq!(v, ReturnVerdict::UpToHorizon);
    }
}
