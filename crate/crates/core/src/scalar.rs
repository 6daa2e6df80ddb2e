//! Scalar abstraction shared by `f64` and forward-mode dual numbers.
//!
//! Every pointwise formula in the crate (expression evaluation, augmentation
//! terms, entropy-flux corrections) is written once against [`Scalar`]. The
//! solver instantiates it with `f64`; the identity diagnostics instantiate it
//! with [`Dual`] to obtain exact x-derivatives of composite expressions.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn cst(c: f64) -> Self;
    /// Real part (the value for `f64`).
    fn re(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// Power with a constant real exponent.
    fn powf(self, p: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn scale(self, c: f64) -> Self {
        self * Self::cst(c)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(c: f64) -> Self {
        c
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// First-order dual number `re + du·δ` with `δ² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub const fn new(re: f64, du: f64) -> Self {
        Self { re, du }
    }

    /// A constant (zero derivative).
    pub const fn constant(re: f64) -> Self {
        Self { re, du: 0.0 }
    }

    // chain rule helper: value f(re), derivative f'(re)·du
    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        Self::new(value, slope * self.du)
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.du * o.re + self.re * o.du)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let q = self.re / o.re;
        Dual::new(q, (self.du - q * o.du) / o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.du)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, o: Dual) {
        *self = *self * o;
    }
}

impl Scalar for Dual {
    fn cst(c: f64) -> Self {
        Dual::constant(c)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual::constant(1.0),
            _ => self.chain(self.re.powi(n), n as f64 * self.re.powi(n - 1)),
        }
    }
    fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Dual::constant(1.0);
        }
        self.chain(self.re.powf(p), p * self.re.powf(p - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-5;
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn dual_matches_finite_differences() {
        let g = |x: Dual| (x.sin() * x.exp() + x.powi(3)) / (x.tanh() + Dual::cst(2.0)) - x.sqrt().ln();
        let gf = |x: f64| (x.sin() * x.exp() + x.powi(3)) / (x.tanh() + 2.0) - x.sqrt().ln();
        for &x in &[0.3, 0.9, 1.7, 2.5] {
            let d = g(Dual::new(x, 1.0));
            assert!((d.re - gf(x)).abs() < 1e-14);
            assert!((d.du - fd(gf, x)).abs() < 1e-8, "x={x}: {} vs {}", d.du, fd(gf, x));
        }
    }

    #[test]
    fn powers_at_zero_are_finite() {
        let z = Dual::new(0.0, 1.0);
        assert_eq!(z.powi(2), Dual::new(0.0, 0.0));
        assert_eq!(z.powi(1), Dual::new(0.0, 1.0));
        assert_eq!(z.powf(2.0), Dual::new(0.0, 0.0));
        assert_eq!(z.powf(0.0), Dual::constant(1.0));
    }
}
