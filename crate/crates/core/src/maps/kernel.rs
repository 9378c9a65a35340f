use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::point::{OpenInterval, Point};
use crate::error::{Error, Result};

/// Smallest natural log returned as a plain real; `exp(-745)` is the last
/// subnormal `f64`.
pub const LOG_FLOOR: f64 = -745.0;

/// The homeomorphism `h(x) = K exp(-x^(-alpha))` on `(0, 1/2]`, reflected
/// through `(1/2, 1/2)` on `[1/2, 1)`, with `K = exp(2^alpha) / 2` so that
/// `h(1/2) = 1/2`.
///
/// Every quantity is evaluated on the log of the gap to the nearer endpoint;
/// because `h` fixes `1/2` and is centrally symmetric it maps gaps to gaps
/// and never changes side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyKernel {
    alpha: f64,
    log_k: f64,
}

impl ConjugacyKernel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            alpha,
            log_k: alpha.exp2() - LN_2,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `log K`.
    pub fn log_k(&self) -> f64 {
        self.log_k
    }

    /// `log h(d)` for a gap `d = exp(log_d)` in `(0, 1/2]`.
    pub fn log_h_gap(&self, log_d: f64) -> f64 {
        self.log_k - (-self.alpha * log_d).exp()
    }

    /// `log h^-1(y)` for a gap `y = exp(log_y)` in `(0, 1/2]`.
    pub fn log_h_inv_gap(&self, log_y: f64) -> f64 {
        -(self.log_k - log_y).ln() / self.alpha
    }

    /// `log Dh(d)`; `Dh` is symmetric about `1/2`, so this covers both sides.
    pub fn log_dh_gap(&self, log_d: f64) -> f64 {
        self.log_h_gap(log_d) + self.alpha.ln() - (1.0 + self.alpha) * log_d
    }

    /// `log Dh^-1(y)` at the gap `y = exp(log_y)`.
    pub fn log_dh_inv_gap(&self, log_y: f64) -> f64 {
        -self.alpha.ln() - log_y + (1.0 + self.alpha) * self.log_h_inv_gap(log_y)
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::from_log_gap(p.side(), self.log_h_gap(p.log_gap()), p.ambient())
    }

    pub fn apply_inv(&self, p: &Point) -> Point {
        Point::from_log_gap(p.side(), self.log_h_inv_gap(p.log_gap()), p.ambient())
    }

    fn interior(x: f64) -> Result<Point> {
        if x == 0.0 || x == 1.0 {
            return Err(Error::Boundary(x));
        }
        if !(0.0 < x && x < 1.0) {
            return Err(Error::Domain(format!("kernel argument {x} outside (0, 1)")));
        }
        Ok(Point::from_x(x, OpenInterval::unit()))
    }

    /// `h(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let p = Self::interior(x)?;
        Ok(floored(self.apply(&p)))
    }

    /// `h^-1(y)`.
    pub fn inv(&self, y: f64) -> Result<f64> {
        let p = Self::interior(y)?;
        Ok(floored(self.apply_inv(&p)))
    }

    /// `log Dh(x)`.
    pub fn log_dh(&self, x: f64) -> Result<f64> {
        let p = Self::interior(x)?;
        Ok(self.log_dh_gap(p.log_gap()))
    }

    /// `log Dh^-1(y)`.
    pub fn log_dh_inv(&self, y: f64) -> Result<f64> {
        let p = Self::interior(y)?;
        Ok(self.log_dh_inv_gap(p.log_gap()))
    }

    /// `log h(x)` without exponentiating; meaningful for `x` in `(0, 1/2]`.
    pub fn log_eval(&self, x: f64) -> Result<f64> {
        let p = Self::interior(x)?;
        match p.side() {
            super::Side::Lo => Ok(self.log_h_gap(p.log_gap())),
            super::Side::Hi => Ok((-self.log_h_gap(p.log_gap()).exp()).ln_1p()),
        }
    }
}

/// Plain coordinate of a point whose gap is clamped at [`LOG_FLOOR`].
pub(crate) fn floored(p: Point) -> f64 {
    Point::from_log_gap(p.side(), p.log_gap().max(LOG_FLOOR), p.ambient()).x()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_is_fixed() {
        for alpha in [0.25, 0.5, 1.0, 2.0, 3.5] {
            let k = ConjugacyKernel::new(alpha).unwrap();
            assert!((k.eval(0.5).unwrap() - 0.5).abs() < 1e-15);
            assert!((k.inv(0.5).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn log_value_near_zero() {
        let k = ConjugacyKernel::new(1.0).unwrap();
        let expected = (0.5 * 2f64.exp()).ln() - 100.0;
        assert!((k.log_eval(0.01).unwrap() - expected).abs() < 1e-12);
        assert!((expected - (-98.69)).abs() < 0.01);
    }

    #[test]
    fn derivative_closed_form() {
        let k = ConjugacyKernel::new(1.5).unwrap();
        for x in [1e-3, 0.05, 0.2, 0.49] {
            let expected = k.log_k() + 1.5f64.ln() - 2.5 * f64::ln(x) - x.powf(-1.5);
            assert!((k.log_dh(x).unwrap() - expected).abs() < 1e-14 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn tiny_inputs_stay_meaningful() {
        let k = ConjugacyKernel::new(0.5).unwrap();
        // h(1e-300) underflows, but h^-1 of a tiny value is finite and positive
        let y = k.inv(1e-300).unwrap();
        assert!(y > 0.0 && y < 1e-3);
        assert!(k.log_dh_inv(1e-300).unwrap().is_finite());
        assert_eq!(k.eval(1e-6).unwrap(), (LOG_FLOOR).exp());
    }

    #[test]
    fn boundary_and_domain_errors() {
        let k = ConjugacyKernel::new(1.0).unwrap();
        assert_eq!(k.eval(0.0), Err(Error::Boundary(0.0)));
        assert_eq!(k.inv(1.0), Err(Error::Boundary(1.0)));
        assert!(matches!(k.eval(1.5), Err(Error::Domain(_))));
        assert!(ConjugacyKernel::new(0.0).is_err());
    }

    #[test]
    fn derivative_is_continuous_at_midpoint() {
        let k = ConjugacyKernel::new(0.7).unwrap();
        let left = k.log_dh(0.5 - 1e-9).unwrap();
        let right = k.log_dh(0.5 + 1e-9).unwrap();
        assert!((left - right).abs() < 1e-6);
        assert!((left - (0.7f64.ln() + 0.7 * LN_2)).abs() < 1e-6);
    }
}
