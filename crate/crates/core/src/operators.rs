//! Banded operators on the truncation `span{xi_0, ..., xi_{D-1}}`.
//!
//! An operator is a map from offsets `d = column - row` to generators giving
//! the entry at `(n, n + d)`. `make(kind, D)` is the compression `P_D A P_D`.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::fock::{poly_geometric, FockVector, TailBound};
use crate::weight::Weight;

pub type Generator = Arc<dyn Fn(usize) -> Cdd + Send + Sync>;

/// `|entry(n)| <= k (n + 1)^p` for every row `n` of the infinite operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub k: f64,
    pub p: f64,
}

impl Growth {
    pub const fn bounded(k: f64) -> Self {
        Growth { k, p: 0.0 }
    }
}

#[derive(Clone)]
pub struct Band {
    gen: Generator,
    growth: Option<Growth>,
}

impl Band {
    pub fn new<F>(gen: F, growth: Option<Growth>) -> Self
    where
        F: Fn(usize) -> Cdd + Send + Sync + 'static,
    {
        Band { gen: Arc::new(gen), growth }
    }

    pub fn constant(c: Cdd) -> Self {
        Band::new(move |_| c, Some(Growth::bounded(c.abs())))
    }

    #[inline]
    pub fn eval(&self, n: usize) -> Cdd {
        (self.gen)(n)
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }
}

#[derive(Clone, Debug)]
pub enum OperatorKind {
    LeftShift,
    RightShift,
    Number,
    Annihilate,
    Create,
    Identity,
    ProjOmega,
    ProjGeq2,
    ProjEven,
    /// `g(N + shift)`
    Diagonal(Weight, i64),
    /// `f!_k(N)`: `xi_n -> prod_{m=0}^{floor(n/k)-1} f(n - k m) xi_n`
    FactorialWeight(Weight, usize),
}

#[derive(Clone)]
pub struct BandedOperator {
    dim: usize,
    bands: BTreeMap<i64, Band>,
    values: Arc<OnceLock<BTreeMap<i64, Vec<Cdd>>>>,
    dense: Arc<OnceLock<DMatrix<Complex64>>>,
}

impl std::fmt::Debug for BandedOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BandedOperator")
            .field("dim", &self.dim)
            .field("offsets", &self.bands.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Crude growth model of a weight from samples at dyadic points.
pub(crate) fn sample_growth(w: &Weight, shift: i64, dim: usize) -> Option<Growth> {
    let mag = |n: usize| w.eval(n as i64 + shift).abs();
    // exponent from the asymptotic samples; the constant absorbs the rest
    let mut p = 0.0f64;
    let mut prev: Option<(f64, f64)> = None;
    for e in 12..=24 {
        let n = 1usize << e;
        let m = mag(n);
        if !m.is_finite() {
            return None;
        }
        if let Some((pn, pm)) = prev {
            if pm > 0.0 && m > 0.0 {
                p = p.max(((m / pm).ln() / (n as f64 / pn).ln()).max(0.0));
            }
        }
        prev = Some((n as f64, m));
    }
    if p > 4.0 {
        return None;
    }
    if p < 0.01 {
        p = 0.0;
    }
    // round up to a multiple of 1/4 so that log corrections are absorbed
    let p = (p * 4.0 - 1e-6).ceil().max(0.0) / 4.0;
    let mut k = 0.0f64;
    for n in (0..(4 * dim).max(64)).chain((3..=24).map(|e| 1usize << e)) {
        let m = mag(n);
        if !m.is_finite() {
            return None;
        }
        k = k.max(m / ((n + 1) as f64).powf(p));
    }
    Some(Growth { k: k * 1.01, p })
}

impl BandedOperator {
    pub fn empty(dim: usize) -> Self {
        BandedOperator {
            dim,
            bands: BTreeMap::new(),
            values: Arc::new(OnceLock::new()),
            dense: Arc::new(OnceLock::new()),
        }
    }

    pub fn from_bands(dim: usize, bands: BTreeMap<i64, Band>) -> Self {
        let mut op = BandedOperator::empty(dim);
        op.bands = bands;
        op
    }

    /// Adds `band` at `offset`, summing with an existing band there.
    pub fn with_band(mut self, offset: i64, band: Band) -> Self {
        let merged = match self.bands.remove(&offset) {
            Some(old) => {
                let growth = match (old.growth, band.growth) {
                    (Some(a), Some(b)) => Some(Growth { k: a.k + b.k, p: a.p.max(b.p) }),
                    _ => None,
                };
                let (g1, g2) = (old.gen, band.gen);
                Band { gen: Arc::new(move |n| g1(n) + g2(n)), growth }
            }
            None => band,
        };
        self.bands.insert(offset, merged);
        self.values = Arc::new(OnceLock::new());
        self.dense = Arc::new(OnceLock::new());
        self
    }

    /// Operator whose materialization is the given dense matrix. Bands are
    /// read back from the matrix diagonals.
    pub fn from_dense(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Parameter(format!("expected a nonempty square matrix, got {}x{}", m.nrows(), m.ncols())));
        }
        let dim = m.nrows();
        let m = Arc::new(m);
        let mut op = BandedOperator::empty(dim);
        for d in -(dim as i64 - 1)..=(dim as i64 - 1) {
            let rows = (0..dim).filter(|&n| {
                let c = n as i64 + d;
                c >= 0 && (c as usize) < dim
            });
            let mut sup = 0.0f64;
            for n in rows {
                sup = sup.max(m[(n, (n as i64 + d) as usize)].norm());
            }
            if sup == 0.0 {
                continue;
            }
            let mm = Arc::clone(&m);
            op.bands.insert(
                d,
                Band::new(
                    move |n| {
                        let c = n as i64 + d;
                        if n < dim && c >= 0 && (c as usize) < dim {
                            Cdd::from(mm[(n, c as usize)])
                        } else {
                            Cdd::ZERO
                        }
                    },
                    None,
                ),
            );
        }
        let dense = Arc::try_unwrap(m).unwrap_or_else(|a| (*a).clone());
        let _ = op.dense.set(dense);
        Ok(op)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.bands.keys().copied()
    }

    pub fn band(&self, offset: i64) -> Option<&Band> {
        self.bands.get(&offset)
    }

    /// `max |d|` over stored bands.
    pub fn bandwidth(&self) -> usize {
        self.bands.keys().map(|d| d.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// How far the operator moves support upward (`max(0, -min d)`).
    pub fn spread_up(&self) -> usize {
        self.bands.keys().next().map_or(0, |&d| (-d).max(0) as usize)
    }

    /// How far it reads from above (`max(0, max d)`).
    pub fn reach_down(&self) -> usize {
        self.bands.keys().next_back().map_or(0, |&d| d.max(0) as usize)
    }

    pub fn entry_dd(&self, n: usize, m: usize) -> Cdd {
        let d = m as i64 - n as i64;
        if n >= self.dim || m >= self.dim {
            return Cdd::ZERO;
        }
        self.bands.get(&d).map_or(Cdd::ZERO, |b| b.eval(n))
    }

    pub fn entry(&self, n: usize, m: usize) -> Complex64 {
        self.entry_dd(n, m).to_c64()
    }

    fn values(&self) -> &BTreeMap<i64, Vec<Cdd>> {
        self.values.get_or_init(|| {
            self.bands
                .iter()
                .map(|(&d, b)| {
                    let lo = (-d).max(0) as usize;
                    let hi = (self.dim as i64 - d.max(0)).max(0) as usize;
                    let v = (lo..hi.max(lo)).map(|n| b.eval(n)).collect();
                    (d, v)
                })
                .collect()
        })
    }

    /// Dense `f64` materialization, cached.
    pub fn dense(&self) -> &DMatrix<Complex64> {
        self.dense.get_or_init(|| {
            let mut m = DMatrix::zeros(self.dim, self.dim);
            for (&d, vals) in self.values() {
                let lo = (-d).max(0) as usize;
                for (i, z) in vals.iter().enumerate() {
                    let n = lo + i;
                    m[(n, (n as i64 + d) as usize)] = z.to_c64();
                }
            }
            m
        })
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim != d {
            return Err(Error::DimensionMismatch { left: self.dim, right: d });
        }
        Ok(())
    }

    /// Propagated certificate for `A v` as an infinite vector.
    fn propagate_tail(&self, tail: Option<TailBound>) -> Option<TailBound> {
        let t = tail?;
        if self.bands.is_empty() {
            return Some(TailBound::zero_from(0));
        }
        let min_d = *self.bands.keys().next()?;
        let n0 = (t.n0 as i64 - min_d).max(0) as usize;
        if t.c == 0.0 {
            return Some(TailBound::zero_from(n0));
        }
        let mut k = 0.0;
        let mut p = 0.0f64;
        for (&d, b) in &self.bands {
            let g = b.growth?;
            k += g.k * t.r.powi(d as i32);
            p = p.max(g.p);
        }
        let k = k * t.c;
        if !k.is_finite() {
            return None;
        }
        if p == 0.0 {
            return Some(TailBound { n0, c: k, r: t.r });
        }
        // k (n+1)^p r^n = (k / r) (n+1)^p r^(n+1) <= (k / r) C' r'^(n+1)
        let (c, r) = poly_geometric(k / t.r, p, t.r);
        let c = c * r;
        (c.is_finite() && r < 1.0).then_some(TailBound { n0, c, r })
    }

    /// Bound on `||P_D A (1 - P_D) v||`, the part of `A v` lost to truncation.
    pub fn truncation_error(&self, v: &FockVector) -> f64 {
        let tail = v.tail_norm();
        if tail == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for (&d, b) in &self.bands {
            if d <= 0 {
                continue;
            }
            match b.growth {
                Some(g) => s += g.k * (self.dim as f64 + 1.0).powf(g.p),
                None => return f64::INFINITY,
            }
        }
        s * tail
    }

    /// Exact banded product in double-double arithmetic.
    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        self.check_dim(v.dim())?;
        let x = v.coeffs();
        let mut out = vec![Cdd::ZERO; self.dim];
        let hi_support = v.support_end();
        for (&d, vals) in self.values() {
            let lo = (-d).max(0) as usize;
            for (i, a) in vals.iter().enumerate() {
                let n = lo + i;
                let c = (n as i64 + d) as usize;
                if c >= hi_support {
                    break;
                }
                let xc = x[c];
                if xc.is_zero() {
                    continue;
                }
                out[n] += *a * xc;
            }
        }
        FockVector::new(out, self.propagate_tail(v.tail()))
    }

    /// Product with the dense `f64` materialization.
    pub fn apply_f64(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_dim(v.len())?;
        let x = DVector::from_column_slice(v);
        Ok((self.dense() * x).iter().copied().collect())
    }

    pub fn adjoint(&self) -> BandedOperator {
        let mut out = BandedOperator::empty(self.dim);
        for (&d, b) in &self.bands {
            let g = Arc::clone(&b.gen);
            // (A*)_{n, n-d} = conj(A_{n-d, n})
            out.bands.insert(
                -d,
                Band {
                    gen: Arc::new(move |n| {
                        let r = n as i64 - d;
                        if r < 0 {
                            Cdd::ZERO
                        } else {
                            g(r as usize).conj()
                        }
                    }),
                    growth: b.growth.map(|gr| Growth { k: gr.k * (1.0 + d.unsigned_abs() as f64).powf(gr.p), p: gr.p }),
                },
            );
        }
        out
    }

    /// Compression of the infinite product `A B`. The summation index runs
    /// over all of `N`, so `L L* = 1` holds exactly; the dense product of the
    /// two compressions differs only in rows whose middle index leaves `[0, D)`.
    pub fn compose(&self, other: &BandedOperator) -> Result<BandedOperator> {
        self.check_dim(other.dim)?;
        let dim = self.dim;
        let mut out = BandedOperator::empty(dim);
        for (&da, ba) in &self.bands {
            for (&db, bb) in &other.bands {
                let (ga, gb) = (Arc::clone(&ba.gen), Arc::clone(&bb.gen));
                let gen = move |n: usize| {
                    let mid = n as i64 + da;
                    if mid < 0 {
                        Cdd::ZERO
                    } else {
                        ga(n) * gb(mid as usize)
                    }
                };
                let growth = match (ba.growth, bb.growth) {
                    (Some(a), Some(b)) => Some(Growth {
                        k: a.k * b.k * (1.0 + da.unsigned_abs() as f64).powf(b.p),
                        p: a.p + b.p,
                    }),
                    _ => None,
                };
                out = out.with_band(da + db, Band::new(gen, growth));
            }
        }
        Ok(out)
    }

    /// `A + s B`
    pub fn add_scaled(&self, s: Cdd, other: &BandedOperator) -> Result<BandedOperator> {
        self.check_dim(other.dim)?;
        let mut out = self.clone();
        for (&d, b) in &other.bands {
            let g = Arc::clone(&b.gen);
            let growth = b.growth.map(|gr| Growth { k: gr.k * s.abs(), p: gr.p });
            out = out.with_band(d, Band { gen: Arc::new(move |n| s * g(n)), growth });
        }
        Ok(out)
    }

    pub fn scaled(&self, s: Cdd) -> BandedOperator {
        BandedOperator::empty(self.dim).add_scaled(s, self).expect("same dimension")
    }

    pub fn power(&self, k: u32) -> Result<BandedOperator> {
        let mut acc = make(OperatorKind::Identity, self.dim);
        for _ in 0..k {
            acc = acc.compose(self)?;
        }
        Ok(acc)
    }

    /// Largest singular value of the dense truncation by Lanczos on `A* A`,
    /// relative tolerance `1e-12`.
    pub fn norm_estimate(&self) -> Result<f64> {
        power_norm(self.dense(), 1e-12, 2000)
    }

    /// Row-major CSV with header `row,col,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wr.write_record(["row", "col", "re", "im"]).map_err(io)?;
        let m = self.dense();
        for n in 0..self.dim {
            for c in 0..self.dim {
                let z = m[(n, c)];
                wr.write_record([n.to_string(), c.to_string(), fmt_f64(z.re), fmt_f64(z.im)]).map_err(io)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `a`
/// and off-diagonal `b`, by Sturm bisection.
fn tridiagonal_max(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    // number of eigenvalues below x
    let count = |x: f64| {
        let mut c = 0;
        let mut q = 1.0f64;
        for i in 0..n {
            let bb = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
            q = a[i] - x - if i > 0 { bb / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (x.abs() + f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                c += 1;
            }
        }
        c
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest singular value by Lanczos on `A* A` with full reorthogonalization.
/// Stops when the top Ritz value moves by at most `tol` (relative) over five
/// steps, or when the Krylov space becomes invariant.
pub(crate) fn power_norm(m: &DMatrix<Complex64>, tol: f64, cap: usize) -> Result<f64> {
    const WINDOW: usize = 5;
    let n = m.ncols();
    if n == 0 {
        return Ok(0.0);
    }
    let mut rng = crate::rng::stream(0x5eed, 0x0a0a);
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(1.0 + 0.1 * rng.gen::<f64>(), 0.1 * rng.gen::<f64>()));
    v /= Complex64::new(v.norm(), 0.0);
    let mut basis = vec![v];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut ritz: Vec<f64> = Vec::new();
    for j in 0..cap.min(n) {
        let mut w = m.ad_mul(&(m * &basis[j]));
        alpha.push(basis[j].dotc(&w).re);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        let theta = tridiagonal_max(&alpha, &beta).max(0.0);
        ritz.push(theta);
        let b = w.norm();
        if b <= 1e-13 * theta.max(f64::MIN_POSITIVE) || j + 1 == n {
            return Ok(theta.sqrt());
        }
        if j >= WINDOW && (theta - ritz[j - WINDOW]).abs() <= tol * theta {
            return Ok(theta.sqrt());
        }
        beta.push(b);
        basis.push(w / Complex64::new(b, 0.0));
    }
    let last = ritz.last().copied().unwrap_or(0.0);
    let change = if ritz.len() > WINDOW { last - ritz[ritz.len() - 1 - WINDOW] } else { f64::INFINITY };
    Err(Error::IterationCap { iterations: cap, estimate: last.sqrt(), change })
}

fn diag<F>(dim: usize, f: F, growth: Option<Growth>) -> BandedOperator
where
    F: Fn(usize) -> Cdd + Send + Sync + 'static,
{
    BandedOperator::empty(dim).with_band(0, Band::new(f, growth))
}

/// The compression of `kind` to dimension `dim`.
pub fn make(kind: OperatorKind, dim: usize) -> BandedOperator {
    let one = Some(Growth::bounded(1.0));
    match kind {
        OperatorKind::LeftShift => BandedOperator::empty(dim).with_band(1, Band::constant(Cdd::ONE)),
        OperatorKind::RightShift => BandedOperator::empty(dim).with_band(-1, Band::constant(Cdd::ONE)),
        OperatorKind::Identity => diag(dim, |_| Cdd::ONE, one),
        OperatorKind::Number => diag(dim, |n| Cdd::from_f64(n as f64), Some(Growth { k: 1.0, p: 1.0 })),
        OperatorKind::Annihilate => BandedOperator::empty(dim).with_band(
            1,
            Band::new(|n| Cdd::real(Dd::new((n + 1) as f64).sqrt()), Some(Growth { k: 1.0, p: 0.5 })),
        ),
        OperatorKind::Create => BandedOperator::empty(dim).with_band(
            -1,
            Band::new(|n| Cdd::real(Dd::new(n as f64).sqrt()), Some(Growth { k: 1.0, p: 0.5 })),
        ),
        OperatorKind::ProjOmega => diag(dim, |n| if n == 0 { Cdd::ONE } else { Cdd::ZERO }, one),
        OperatorKind::ProjGeq2 => diag(dim, |n| if n >= 2 { Cdd::ONE } else { Cdd::ZERO }, one),
        OperatorKind::ProjEven => diag(dim, |n| if n % 2 == 0 { Cdd::ONE } else { Cdd::ZERO }, one),
        OperatorKind::Diagonal(g, shift) => {
            let growth = sample_growth(&g, shift, dim);
            diag(dim, move |n| g.eval(n as i64 + shift), growth)
        }
        OperatorKind::FactorialWeight(f, k) => {
            let k = k.max(1);
            diag(
                dim,
                move |n| {
                    let mut acc = Cdd::ONE;
                    for m in 0..n / k {
                        acc *= f.eval((n - k * m) as i64);
                    }
                    acc
                },
                None,
            )
        }
    }
}

/// `L^m` for `m >= 0`, `L*^{-m}` for `m < 0`.
pub fn shift_power(m: i64, dim: usize) -> BandedOperator {
    if m == 0 {
        return make(OperatorKind::Identity, dim);
    }
    BandedOperator::empty(dim).with_band(m, Band::constant(Cdd::ONE))
}

/// `g(N + shift) L^k`: band `+k` with generator `g(n + shift)`.
pub fn weighted_shift(g: &Weight, shift: i64, k: usize, dim: usize) -> BandedOperator {
    let growth = sample_growth(g, shift, dim);
    let g = g.clone();
    BandedOperator::empty(dim).with_band(k as i64, Band::new(move |n| g.eval(n as i64 + shift), growth))
}

/// `sum_j c_j L^j`
pub fn polynomial_in_shift(coeffs: &[Complex64], dim: usize) -> BandedOperator {
    let mut op = BandedOperator::empty(dim);
    for (j, &c) in coeffs.iter().enumerate() {
        if c != Complex64::new(0.0, 0.0) {
            op = op.with_band(j as i64, Band::constant(Cdd::from(c)));
        }
    }
    op
}

/// `A (B v) - B (A v)`, refusing inputs where truncation would corrupt the
/// result.
///
/// For the order `X (Y v)` the compression is exact when either `X` never
/// reads from higher indices or `Y v` stays inside the truncation.
pub fn commutator_apply(a: &BandedOperator, b: &BandedOperator, v: &FockVector) -> Result<FockVector> {
    a.check_dim(b.dim)?;
    a.check_dim(v.dim())?;
    commutator_guard(a, b, v)?;
    let ab = a.apply(&b.apply(v)?)?;
    let ba = b.apply(&a.apply(v)?)?;
    ab.sub(&ba)
}

pub fn commutator_guard(a: &BandedOperator, b: &BandedOperator, v: &FockVector) -> Result<()> {
    let vanishes = matches!(v.tail(), Some(t) if t.c == 0.0 && t.n0 <= v.dim());
    if !vanishes {
        return Err(Error::Guard("vector is not certified to vanish beyond the truncation".into()));
    }
    let s = v.support_end();
    for (x, y) in [(a, b), (b, a)] {
        if x.reach_down() > 0 && s + y.spread_up() > v.dim() {
            return Err(Error::Guard(format!(
                "support {s} plus upward spread {} exceeds dimension {}",
                y.spread_up(),
                v.dim()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{basis_vector, coherent_vector};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense_eq(a: &BandedOperator, b: &BandedOperator) -> bool {
        a.dense() == b.dense()
    }

    fn dense_of(a: &BandedOperator) -> DMatrix<Complex64> {
        a.dense().clone()
    }

    #[test]
    fn left_shift_entries() {
        let l = make(OperatorKind::LeftShift, 3);
        let m = dense_of(&l);
        for n in 0..3 {
            for k in 0..3 {
                let want = if k == n + 1 { 1.0 } else { 0.0 };
                assert_eq!(m[(n, k)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn shift_identities() {
        for d in [1, 2, 5, 17] {
            let l = make(OperatorKind::LeftShift, d);
            let ls = make(OperatorKind::RightShift, d);
            let id = make(OperatorKind::Identity, d);
            let lls = l.compose(&ls).unwrap();
            assert!(dense_eq(&lls, &id));
            let lsl = ls.compose(&l).unwrap();
            let q = id.add_scaled(-Cdd::ONE, &make(OperatorKind::ProjOmega, d)).unwrap();
            assert!(dense_eq(&lsl, &q));
        }
    }

    #[test]
    fn basic_applications() {
        let n = make(OperatorKind::Number, 8);
        let v = n.apply(&basis_vector(3, 8).unwrap()).unwrap();
        assert_eq!(v, basis_vector(3, 8).unwrap().scale(c(3.0, 0.0)).with_tail(v.tail()));
        let ad = make(OperatorKind::Create, 8);
        for k in 0..7 {
            let w = ad.apply(&basis_vector(k, 8).unwrap()).unwrap();
            assert!((w.coeff(k + 1).re - ((k + 1) as f64).sqrt()).abs() < 1e-16);
            assert!((w.norm() - ((k + 1) as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn annihilation_on_coherent_vector() {
        let beta = c(0.5, 0.0);
        let w = coherent_vector(beta, 32).unwrap();
        let aw = make(OperatorKind::Annihilate, 32).apply(&w).unwrap();
        let r = aw.sub(&w.scale(beta)).unwrap();
        // only the last row misses the (discarded) next coefficient
        let last = w.coeff(31).norm();
        assert!(r.norm() <= 1e-12 + 32f64.sqrt() * last * 0.5 + w.tail_norm() * 6.0);
    }

    #[test]
    fn compose_examples() {
        let l = make(OperatorKind::LeftShift, 10);
        let l2 = l.compose(&l).unwrap();
        assert_eq!(l2.offsets().collect::<Vec<_>>(), vec![2]);
        assert!(dense_eq(&l2, &shift_power(2, 10)));
        let g = Weight::new_dd("sqrt((n+2)/(n+1))", |n| {
            Cdd::real((Dd::new((n + 2) as f64) / Dd::new((n + 1) as f64)).sqrt())
        });
        let y = make(OperatorKind::Diagonal(g.clone(), 0), 10).compose(&l2).unwrap();
        for n in 0..8 {
            let want = ((n + 2) as f64 / (n + 1) as f64).sqrt();
            assert!((y.entry(n, n + 2).re - want).abs() < 1e-16);
        }
        let pe = make(OperatorKind::ProjEven, 10).compose(&l).unwrap();
        assert_eq!(pe.apply(&basis_vector(2, 10).unwrap()).unwrap().norm(), 0.0);
    }

    #[test]
    fn commutator_examples() {
        let d = 8;
        let a = make(OperatorKind::Annihilate, d);
        let ad = make(OperatorKind::Create, d);
        let v = commutator_apply(&a, &ad, &basis_vector(5, d).unwrap()).unwrap();
        assert!(v.distance(&basis_vector(5, d).unwrap()).unwrap() < 1e-15);

        let n = make(OperatorKind::Number, d);
        let l = make(OperatorKind::LeftShift, d);
        let v = commutator_apply(&n, &l, &basis_vector(5, d).unwrap()).unwrap();
        assert!(v.distance(&basis_vector(4, d).unwrap().scale(c(-1.0, 0.0))).unwrap() < 1e-15);

        for k in 1..4i64 {
            let lk = shift_power(-k, 16);
            let nn = make(OperatorKind::Number, 16);
            for m in 0..(16 - k as usize) {
                let v = commutator_apply(&nn, &lk, &basis_vector(m, 16).unwrap()).unwrap();
                let want = basis_vector(m + k as usize, 16).unwrap().scale(c(k as f64, 0.0));
                assert!(v.distance(&want).unwrap() == 0.0);
            }
        }
    }

    #[test]
    fn commutator_guard_refuses_edge() {
        let d = 8;
        let a = make(OperatorKind::Annihilate, d);
        let ad = make(OperatorKind::Create, d);
        let r = commutator_apply(&a, &ad, &basis_vector(7, d).unwrap());
        assert!(matches!(r, Err(Error::Guard(_))));
        let w = coherent_vector(c(0.5, 0.0), d).unwrap();
        assert!(matches!(commutator_apply(&a, &ad, &w), Err(Error::Guard(_))));
    }

    #[test]
    fn norm_estimates() {
        let id = make(OperatorKind::Identity, 50);
        assert!((id.norm_estimate().unwrap() - 1.0).abs() < 1e-12);
        for d in [2, 3, 40, 200] {
            let l = make(OperatorKind::LeftShift, d);
            assert!((l.norm_estimate().unwrap() - 1.0).abs() < 1e-10);
        }
        let n = make(OperatorKind::Number, 10);
        assert!((n.norm_estimate().unwrap() - 9.0).abs() < 1e-9);
        let mut rng = crate::rng::stream(11, 0);
        let m = DMatrix::from_fn(40, 40, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let svd_max = m.singular_values().max();
        let est = BandedOperator::from_dense(m).unwrap().norm_estimate().unwrap();
        assert!((est - svd_max).abs() <= 1e-10 * svd_max, "{est} vs {svd_max}");
    }

    #[test]
    fn polar_decompositions() {
        let d = 20;
        let sq = Weight::new_dd("sqrt(n)", |n| Cdd::real(Dd::new(n as f64).sqrt()));
        let a = make(OperatorKind::Annihilate, d);
        let ad = make(OperatorKind::Create, d);
        let l = make(OperatorKind::LeftShift, d);
        let ls = make(OperatorKind::RightShift, d);
        let s1 = make(OperatorKind::Diagonal(sq, 1), d);
        let pa = s1.compose(&l).unwrap();
        let pad = ls.compose(&s1).unwrap();
        for n in 0..d - 1 {
            for m in 0..d - 1 {
                assert_eq!(pa.entry(n, m), a.entry(n, m));
                assert_eq!(pad.entry(n, m), ad.entry(n, m));
            }
        }
    }

    #[test]
    fn factorial_weight() {
        let f = Weight::identity();
        let fw = make(OperatorKind::FactorialWeight(f, 2), 12);
        // n = 6: f(6) f(4) f(2)
        assert_eq!(fw.entry(6, 6), c(48.0, 0.0));
        assert_eq!(fw.entry(7, 7), c(105.0, 0.0));
        assert_eq!(fw.entry(1, 1), c(1.0, 0.0));
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        make(OperatorKind::LeftShift, 2).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "row,col,re,im\n0,0,0.0,0.0\n0,1,1.0,0.0\n1,0,0.0,0.0\n1,1,0.0,0.0\n");
    }

    #[test]
    fn from_dense_round_trip() {
        let m = DMatrix::from_fn(4, 4, |i, j| c(i as f64 - j as f64, (i * j) as f64));
        let op = BandedOperator::from_dense(m.clone()).unwrap();
        assert_eq!(op.dense(), &m);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(op.entry(i, j), m[(i, j)]);
            }
        }
        let v = FockVector::from_c64(&[c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        let w = op.apply(&v).unwrap().to_c64();
        let w2 = op.apply_f64(&v.to_c64()).unwrap();
        for k in 0..4 {
            assert!((w[k] - w2[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn tail_propagates_through_bounded_bands() {
        let w = crate::fock::geometric_vector(c(0.5, 0.0), 40).unwrap();
        let l = make(OperatorKind::LeftShift, 40);
        let lw = l.apply(&w).unwrap();
        let t = lw.tail().unwrap();
        for n in 0..40 {
            assert!(t.bounds(n, lw.coeff(n).norm()));
        }
        let nw = make(OperatorKind::Number, 40).apply(&w).unwrap();
        let t = nw.tail().unwrap();
        for n in 0..40 {
            assert!(t.bounds(n, nw.coeff(n).norm()), "n={n}");
        }
    }

    fn arb_op(d: usize) -> impl Strategy<Value = BandedOperator> {
        proptest::collection::vec((-3i64..4, -2.0f64..2.0, -2.0f64..2.0, 0.0f64..1.0), 1..5).prop_map(move |bands| {
            let mut op = BandedOperator::empty(d);
            for (off, re, im, slope) in bands {
                op = op.with_band(
                    off,
                    Band::new(move |n| Cdd::from(Complex64::new(re + slope * n as f64, im)), None),
                );
            }
            op
        })
    }

    fn arb_vec(d: usize) -> impl Strategy<Value = FockVector> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
            .prop_map(|v| FockVector::from_c64(&v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect::<Vec<_>>()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn adjoint_is_involutive_and_respects_inner_product(a in arb_op(12), u in arb_vec(12), v in arb_vec(12)) {
            let aa = a.adjoint().adjoint();
            prop_assert_eq!(aa.dense(), a.dense());
            let lhs = a.apply(&u).unwrap().inner(&v).unwrap();
            let rhs = u.inner(&a.adjoint().apply(&v).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-14);
        }

        #[test]
        fn apply_reproduces_dense_columns(a in arb_op(10), m in 0usize..10) {
            let col = a.apply(&basis_vector(m, 10).unwrap()).unwrap();
            for n in 0..10 {
                prop_assert_eq!(col.coeff(n), a.dense()[(n, m)]);
            }
        }

        #[test]
        fn compose_matches_dense_and_is_associative(a in arb_op(9), b in arb_op(9), cc in arb_op(9)) {
            let ab = a.compose(&b).unwrap();
            let prod = a.dense() * b.dense();
            // rows whose middle index stays inside the truncation
            for i in 0..6 { for j in 0..9 {
                prop_assert!((ab.dense()[(i, j)] - prod[(i, j)]).norm() < 1e-12);
            }}
            let l = a.compose(&b).unwrap().compose(&cc).unwrap();
            let r = a.compose(&b.compose(&cc).unwrap()).unwrap();
            for i in 0..9 { for j in 0..9 {
                prop_assert!((l.dense()[(i, j)] - r.dense()[(i, j)]).norm() < 1e-11);
            }}
        }

        #[test]
        fn number_shift_commutators(k in 1i64..4, m in 0usize..12) {
            let d = 16;
            let n = make(OperatorKind::Number, d);
            let lk = shift_power(k, d);
            let v = basis_vector(m, d).unwrap();
            let got = commutator_apply(&n, &lk, &v).unwrap();
            let want = lk.apply(&v).unwrap().scale(Complex64::new(-(k as f64), 0.0));
            prop_assert_eq!(got.distance(&want).unwrap(), 0.0);
        }
    }
}
