//! Integer-indexed complex sequences (`g(n)`, `f(n)`) used as diagonal
//! weights and band generators.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dd::{Cdd, Dd};

/// A pure function `n -> w(n)` evaluated in double-double precision.
#[derive(Clone)]
pub struct Weight {
    f: Arc<dyn Fn(i64) -> Cdd + Send + Sync>,
    label: Arc<str>,
}

impl Weight {
    pub fn new_dd<F>(label: &str, f: F) -> Self
    where
        F: Fn(i64) -> Cdd + Send + Sync + 'static,
    {
        Weight { f: Arc::new(f), label: Arc::from(label) }
    }

    /// Wraps an `f64` closure. Values are exact in `f64` only when the closure
    /// is; prefer [`Weight::new_dd`] for irrational weights fed to series.
    pub fn new<F>(label: &str, f: F) -> Self
    where
        F: Fn(i64) -> Complex64 + Send + Sync + 'static,
    {
        Weight::new_dd(label, move |n| Cdd::from(f(n)))
    }

    #[inline]
    pub fn eval(&self, n: i64) -> Cdd {
        (self.f)(n)
    }

    #[inline]
    pub fn eval_c64(&self, n: i64) -> Complex64 {
        (self.f)(n).to_c64()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn constant(c: Complex64) -> Self {
        Weight::new(&format!("const({c})"), move |_| c)
    }

    pub fn one() -> Self {
        Weight::new_dd("1", |_| Cdd::ONE)
    }

    /// `n`
    pub fn identity() -> Self {
        Weight::new_dd("n", |n| Cdd::from_f64(n as f64))
    }

    /// `sqrt(n)`, zero for negative `n`.
    pub fn sqrt_n() -> Self {
        Weight::new_dd("sqrt(n)", |n| {
            if n <= 0 {
                Cdd::ZERO
            } else {
                Cdd::real(Dd::new(n as f64).sqrt())
            }
        })
    }

    /// `sqrt(n / (n - 1))`: `g_{N+2}` of the even-sector angle operator.
    pub fn angle_even() -> Self {
        Weight::new_dd("sqrt(n/(n-1))", |n| {
            if n <= 1 {
                Cdd::ZERO
            } else {
                Cdd::real((Dd::new(n as f64) / Dd::new((n - 1) as f64)).sqrt())
            }
        })
    }

    /// `sqrt((n - 1) / n)`: `g_{N+2}` of the odd-sector angle operator.
    pub fn angle_odd() -> Self {
        Weight::new_dd("sqrt((n-1)/n)", |n| {
            if n <= 1 {
                Cdd::ZERO
            } else {
                Cdd::real((Dd::new((n - 1) as f64) / Dd::new(n as f64)).sqrt())
            }
        })
    }

    /// `sqrt(n (n - 1))`: the weight `f` with `f_N L*^2 = a*^2`.
    pub fn sqrt_falling2() -> Self {
        Weight::new_dd("sqrt(n(n-1))", |n| {
            if n <= 1 {
                Cdd::ZERO
            } else {
                Cdd::real((Dd::new(n as f64) * Dd::new((n - 1) as f64)).sqrt())
            }
        })
    }

    pub fn map<F>(&self, label: &str, g: F) -> Self
    where
        F: Fn(Cdd) -> Cdd + Send + Sync + 'static,
    {
        let inner = self.clone();
        Weight::new_dd(label, move |n| g(inner.eval(n)))
    }

    pub fn shifted(&self, by: i64) -> Self {
        let inner = self.clone();
        Weight::new_dd(&format!("{}@{by:+}", self.label), move |n| inner.eval(n + by))
    }

    pub fn product(&self, other: &Weight) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Weight::new_dd(&format!("({})*({})", self.label, other.label), move |n| {
            a.eval(n) * b.eval(n)
        })
    }

    /// `1 / conj(g(n))`
    pub fn conj_recip(&self) -> Self {
        self.map(&format!("1/conj({})", self.label), |z| z.conj().recip())
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.label)
    }
}
