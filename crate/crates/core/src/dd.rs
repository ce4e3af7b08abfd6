//! Double-double arithmetic.
//!
//! Power series in the shift operators are numerically unstable in plain
//! `f64`: the powers `(1 - A)^k` of a non-normal weighted shift amplify any
//! rounding perturbation roughly like `(1 + |mu|)^k`, which destroys the
//! result long before the series converges. Vectors and band entries that
//! feed the series engine are therefore carried with ~106 bits of mantissa.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    /// Square root; one Newton correction on top of the `f64` root.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (sq, sq_err) = two_prod(ax, ax);
        let diff = (self - Dd { hi: sq, lo: sq_err }).hi;
        let (s, e) = two_sum(ax, diff * x * 0.5);
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    /// Exact product by a power of two.
    #[inline]
    pub fn ldexp(self, p: i32) -> Self {
        let f = 2f64.powi(p);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, b: f64) -> Dd {
        self / Dd::new(b)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: Cdd = Cdd { re: Dd::ONE, im: Dd::ZERO };
    pub const I: Cdd = Cdd { re: Dd::ZERO, im: Dd::ONE };

    #[inline]
    pub const fn new(re: Dd, im: Dd) -> Self {
        Cdd { re, im }
    }

    #[inline]
    pub fn real(x: Dd) -> Self {
        Cdd { re: x, im: Dd::ZERO }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Cdd::real(Dd::new(x))
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn conj(self) -> Self {
        Cdd { re: self.re, im: -self.im }
    }

    #[inline]
    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.to_c64().norm()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.re.hi == 0.0 && self.im.hi == 0.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    #[inline]
    pub fn scale(self, s: Dd) -> Self {
        Cdd { re: self.re * s, im: self.im * s }
    }

    #[inline]
    pub fn scale_f64(self, s: f64) -> Self {
        Cdd { re: self.re * s, im: self.im * s }
    }

    pub fn recip(self) -> Self {
        let d = self.norm_sqr();
        Cdd { re: self.re / d, im: -self.im / d }
    }

    pub fn powu(self, n: u32) -> Self {
        let mut acc = Cdd::ONE;
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl From<Complex64> for Cdd {
    fn from(z: Complex64) -> Self {
        Cdd { re: Dd::new(z.re), im: Dd::new(z.im) }
    }
}

impl From<f64> for Cdd {
    fn from(x: f64) -> Self {
        Cdd::from_f64(x)
    }
}

impl From<Dd> for Cdd {
    fn from(x: Dd) -> Self {
        Cdd::real(x)
    }
}

impl fmt::Debug for Cdd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_c64())
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    #[inline]
    fn neg(self) -> Cdd {
        Cdd { re: -self.re, im: -self.im }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    #[inline]
    fn add(self, b: Cdd) -> Cdd {
        Cdd { re: self.re + b.re, im: self.im + b.im }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    #[inline]
    fn sub(self, b: Cdd) -> Cdd {
        Cdd { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    #[inline]
    fn mul(self, b: Cdd) -> Cdd {
        // real operands are common (diagonal weights), skip the cross terms
        if self.im.hi == 0.0 && self.im.lo == 0.0 {
            return b.scale(self.re);
        }
        if b.im.hi == 0.0 && b.im.lo == 0.0 {
            return self.scale(b.re);
        }
        Cdd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, b: Cdd) -> Cdd {
        if b.im.hi == 0.0 && b.im.lo == 0.0 {
            return Cdd { re: self.re / b.re, im: self.im / b.re };
        }
        self * b.recip()
    }
}

impl AddAssign for Cdd {
    #[inline]
    fn add_assign(&mut self, b: Cdd) {
        *self = *self + b;
    }
}

impl SubAssign for Cdd {
    #[inline]
    fn sub_assign(&mut self, b: Cdd) {
        *self = *self - b;
    }
}

impl MulAssign for Cdd {
    #[inline]
    fn mul_assign(&mut self, b: Cdd) {
        *self = *self * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_keeps_double_double_precision() {
        let third = Dd::ONE / Dd::new(3.0);
        let back = third * Dd::new(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-30, "{back:?}");
    }

    #[test]
    fn sqrt_squares_back() {
        for x in [2.0, 3.0, 0.5, 1e-8, 12345.678] {
            let r = Dd::new(x).sqrt();
            let err = (r * r - Dd::new(x)).to_f64().abs();
            assert!(err < 1e-30 * x.max(1.0), "x={x} err={err}");
        }
        assert_eq!(Dd::ZERO.sqrt(), Dd::ZERO);
    }

    #[test]
    fn addition_captures_small_terms() {
        let a = Dd::ONE + Dd::new(1e-20);
        assert_eq!((a - Dd::ONE).to_f64(), 1e-20);
    }

    #[test]
    fn complex_ops() {
        let z = Cdd::from(Complex64::new(0.3, -0.7));
        let w = Cdd::from(Complex64::new(-1.1, 0.25));
        let p = (z * w).to_c64();
        let expect = Complex64::new(0.3, -0.7) * Complex64::new(-1.1, 0.25);
        assert!((p - expect).norm() < 1e-15);
        let q = (z / w * w - z).to_c64();
        assert!(q.norm() < 1e-30);
        assert!((z.powu(5).to_c64() - Complex64::new(0.3, -0.7).powu(5)).norm() < 1e-15);
    }
}
