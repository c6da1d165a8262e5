//! Minimal forward-mode automatic differentiation.
//!
//! The Archimedean log densities are written once over [`Scalar`]; evaluating
//! them with [`Dual`] carries the exact derivative with respect to the copula
//! parameter alongside the value.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(x: f64) -> Self;
    fn value(self) -> f64;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn ln_1p(self) -> Self;
    fn exp_m1(self) -> Self;

    fn recip(self) -> Self {
        Self::constant(1.0) / self
    }

    /// `ln(exp(self) + exp(other))` without overflow.
    fn log_add_exp(self, other: Self) -> Self {
        let (hi, lo) = if self.value() >= other.value() {
            (self, other)
        } else {
            (other, self)
        };
        if lo.value() == f64::NEG_INFINITY {
            return hi;
        }
        hi + (lo - hi).exp().ln_1p()
    }
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
}

/// A value paired with its derivative along one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn variable(x: f64) -> Self {
        Dual { re: x, eps: 1.0 }
    }
}

impl Scalar for Dual {
    fn constant(x: f64) -> Self {
        Dual { re: x, eps: 0.0 }
    }
    fn value(self) -> f64 {
        self.re
    }
    fn ln(self) -> Self {
        Dual {
            re: self.re.ln(),
            eps: self.eps / self.re,
        }
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            eps: self.eps * e,
        }
    }
    fn ln_1p(self) -> Self {
        Dual {
            re: self.re.ln_1p(),
            eps: self.eps / (1.0 + self.re),
        }
    }
    fn exp_m1(self) -> Self {
        Dual {
            re: self.re.exp_m1(),
            eps: self.eps * self.re.exp(),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            re: self.re + o.re,
            eps: self.eps + o.eps,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            re: self.re - o.re,
            eps: self.eps - o.eps,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            re: self.re * o.re,
            eps: self.eps * o.re + self.re * o.eps,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual {
            re: self.re / o.re,
            eps: (self.eps * o.re - self.re * o.eps) / (o.re * o.re),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            re: -self.re,
            eps: -self.eps,
        }
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, o: f64) -> Dual {
        Dual {
            re: self.re + o,
            eps: self.eps,
        }
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, o: f64) -> Dual {
        Dual {
            re: self.re - o,
            eps: self.eps,
        }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual {
            re: self.re * o,
            eps: self.eps * o,
        }
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, o: f64) -> Dual {
        Dual {
            re: self.re / o,
            eps: self.eps / o,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: S) -> S {
        (x * x + 1.0).ln() * x.exp_m1() / (x.ln_1p() + 2.0)
    }

    #[test]
    fn dual_derivative_matches_central_difference() {
        for &x in &[0.1, 0.7, 2.5, 9.0] {
            let d = f(Dual::variable(x));
            let h = 1e-6;
            let fd = (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((d.eps - fd).abs() < 1e-7 * fd.abs().max(1.0));
            assert_eq!(d.re, f(x));
        }
    }

    #[test]
    fn log_add_exp_handles_large_arguments() {
        let a = Dual::variable(800.0);
        let b = Dual::constant(799.0);
        let r = a.log_add_exp(b);
        assert!((r.re - (800.0 + (-1f64).exp().ln_1p())).abs() < 1e-12);
        assert!((r.eps - 1.0 / (1.0 + (-1f64).exp())).abs() < 1e-12);
    }
}
