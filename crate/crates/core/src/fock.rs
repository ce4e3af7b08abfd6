//! Truncated vectors in `l2(N)` with certified geometric tails.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::rng;
use crate::weight::Weight;

/// Largest dimension adaptive truncation will try.
pub const MAX_AUTO_DIM: usize = 1 << 18;

/// Default tail mass for [`Truncation::Auto`].
pub const DEFAULT_TAIL_EPS: f64 = 1e-14;

/// Certificate `|c_n| <= c * r^n` for all `n >= n0` of the untruncated vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub n0: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub r: f64,
}

impl TailBound {
    /// The vector vanishes from `n0` on.
    pub fn zero_from(n0: usize) -> Self {
        TailBound { n0, c: 0.0, r: 0.0 }
    }

    /// Bound on the l2 norm of `(c_n)_{n >= d}`; infinite when `d < n0`.
    pub fn norm_beyond(&self, d: usize) -> f64 {
        if d < self.n0 {
            return f64::INFINITY;
        }
        if self.c == 0.0 {
            return 0.0;
        }
        if self.r <= 0.0 {
            return if d == 0 { self.c } else { 0.0 };
        }
        let ln = self.c.ln() + d as f64 * self.r.ln() - 0.5 * (1.0 - self.r * self.r).ln();
        ln.exp()
    }

    pub fn bounds(&self, n: usize, value: f64) -> bool {
        n < self.n0 || value <= self.c * self.r.powf(n as f64) + 1e-14
    }

    /// Certificate for the coefficientwise sum of two certified vectors.
    pub fn sum(&self, other: &TailBound) -> TailBound {
        TailBound {
            n0: self.n0.max(other.n0),
            c: self.c + other.c,
            r: self.r.max(other.r),
        }
    }

    pub fn scaled(&self, s: f64) -> TailBound {
        TailBound { c: self.c * s, ..*self }
    }

    fn is_valid(&self) -> bool {
        self.c.is_finite() && self.c >= 0.0 && self.r >= 0.0 && self.r < 1.0
    }
}

/// Truncation policy for constructors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    /// Smallest dimension whose certified tail norm is below `eps`.
    Auto(f64),
}

impl Truncation {
    pub fn auto() -> Self {
        Truncation::Auto(DEFAULT_TAIL_EPS)
    }
}

impl From<usize> for Truncation {
    fn from(d: usize) -> Self {
        Truncation::Fixed(d)
    }
}

/// Builds with `build(d)` for a fixed `d`, or searches the smallest `d` whose
/// certified tail is below `eps`.
pub fn resolve<F>(trunc: Truncation, build: F) -> Result<FockVector>
where
    F: Fn(usize) -> Result<FockVector>,
{
    match trunc {
        Truncation::Fixed(d) => {
            if d == 0 {
                return Err(Error::Parameter("dimension must be positive".into()));
            }
            build(d)
        }
        Truncation::Auto(eps) => {
            if !(eps > 0.0) {
                return Err(Error::Parameter(format!("tail tolerance {eps} must be positive")));
            }
            let ok = |v: &FockVector| v.tail_norm() < eps;
            let mut hi = 8usize;
            let mut found = build(hi)?;
            while !ok(&found) {
                if hi >= MAX_AUTO_DIM {
                    return Err(Error::Divergent(format!(
                        "tail norm {:e} still above {eps:e} at dimension {hi}",
                        found.tail_norm()
                    )));
                }
                hi *= 2;
                found = build(hi)?;
            }
            let mut lo = hi / 2;
            if lo < 8 {
                return Ok(found);
            }
            // invariant: build(lo) fails the tolerance, build(hi) passes
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let v = build(mid)?;
                if ok(&v) {
                    hi = mid;
                    found = v;
                } else {
                    lo = mid;
                }
            }
            Ok(found)
        }
    }
}

/// A truncated coefficient sequence `(c_0, ..., c_{D-1})`.
#[derive(Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<Cdd>,
    tail: Option<TailBound>,
}

impl std::fmt::Debug for FockVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FockVector")
            .field("dim", &self.dim())
            .field("coeffs", &self.to_c64())
            .field("tail", &self.tail)
            .finish()
    }
}

impl FockVector {
    pub fn new(coeffs: Vec<Cdd>, tail: Option<TailBound>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if let Some(t) = tail {
            if !t.is_valid() {
                return Err(Error::Parameter(format!("invalid tail certificate {t:?}")));
            }
        }
        Ok(FockVector { coeffs, tail })
    }

    /// Coefficients taken as exact; the vector is declared zero beyond `D`.
    pub fn from_c64(coeffs: &[Complex64]) -> Result<Self> {
        let d = coeffs.len();
        FockVector::new(coeffs.iter().map(|&z| Cdd::from(z)).collect(), Some(TailBound::zero_from(d)))
    }

    pub fn zeros(d: usize) -> Result<Self> {
        FockVector::new(vec![Cdd::ZERO; d], Some(TailBound::zero_from(0)))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn coeffs(&self) -> &[Cdd] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Cdd> {
        self.coeffs
    }

    #[inline]
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs[n].to_c64()
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|z| z.to_c64()).collect()
    }

    pub fn tail(&self) -> Option<TailBound> {
        self.tail
    }

    pub fn with_tail(mut self, tail: Option<TailBound>) -> Self {
        self.tail = tail;
        self
    }

    /// Certified l2 norm of the discarded coefficients; infinite without a
    /// certificate.
    pub fn tail_norm(&self) -> f64 {
        match self.tail {
            Some(t) => t.norm_beyond(self.dim()),
            None => f64::INFINITY,
        }
    }

    /// One past the last nonzero stored coefficient.
    pub fn support_end(&self) -> usize {
        self.coeffs.iter().rposition(|z| !z.is_zero()).map_or(0, |i| i + 1)
    }

    pub fn norm_sqr_dd(&self) -> Dd {
        self.coeffs.iter().fold(Dd::ZERO, |acc, z| acc + z.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr_dd().to_f64()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn check_dim(&self, other: &FockVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    /// `(self, other)`, conjugate-linear in `self`.
    pub fn inner_dd(&self, other: &FockVector) -> Result<Cdd> {
        self.check_dim(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(Cdd::ZERO, |acc, (a, b)| acc + a.conj() * *b))
    }

    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        Ok(self.inner_dd(other)?.to_c64())
    }

    pub fn scale_dd(&self, s: Cdd) -> FockVector {
        FockVector {
            coeffs: self.coeffs.iter().map(|z| *z * s).collect(),
            tail: self.tail.map(|t| t.scaled(s.abs())),
        }
    }

    pub fn scale(&self, s: Complex64) -> FockVector {
        self.scale_dd(Cdd::from(s))
    }

    /// `self + s * other`
    pub fn axpy(&self, s: Cdd, other: &FockVector) -> Result<FockVector> {
        self.check_dim(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a + s * *b).collect();
        let tail = match (self.tail, other.tail) {
            (Some(a), Some(b)) => Some(a.sum(&b.scaled(s.abs()))),
            _ => None,
        };
        Ok(FockVector { coeffs, tail })
    }

    pub fn add(&self, other: &FockVector) -> Result<FockVector> {
        self.axpy(Cdd::ONE, other)
    }

    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        self.axpy(-Cdd::ONE, other)
    }

    /// l2 distance over the stored range.
    pub fn distance(&self, other: &FockVector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub fn normalized(&self) -> Result<FockVector> {
        let n = self.norm_sqr_dd().sqrt();
        if n.hi == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        Ok(self.scale_dd(Cdd::real(n.recip())))
    }

    /// Keeps only even (`true`) or odd indices.
    pub fn parity_part(&self, even: bool) -> FockVector {
        let keep = if even { 0 } else { 1 };
        FockVector {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(n, z)| if n % 2 == keep { *z } else { Cdd::ZERO })
                .collect(),
            tail: self.tail,
        }
    }

    /// First `d` coefficients. The certificate still describes the full vector.
    pub fn truncated(&self, d: usize) -> Result<FockVector> {
        if d == 0 || d > self.dim() {
            return Err(Error::Parameter(format!("cannot truncate dimension {} to {d}", self.dim())));
        }
        Ok(FockVector { coeffs: self.coeffs[..d].to_vec(), tail: self.tail })
    }

    /// Zero-pads to dimension `d`; only allowed when the vector is certified to
    /// vanish beyond its stored range.
    pub fn padded(&self, d: usize) -> Result<FockVector> {
        if d < self.dim() {
            return self.truncated(d);
        }
        match self.tail {
            Some(t) if t.c == 0.0 && t.n0 <= self.dim() => {
                let mut coeffs = self.coeffs.clone();
                coeffs.resize(d, Cdd::ZERO);
                Ok(FockVector { coeffs, tail: self.tail })
            }
            _ => Err(Error::Precondition(
                "padding requires a vector certified to vanish beyond its truncation".into(),
            )),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&Wire::from(self)).expect("vector serializes")
    }

    pub fn from_json(s: &str) -> Result<FockVector> {
        let w: Wire = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        w.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    re_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im_lo: Option<Vec<f64>>,
    tail: Option<TailBound>,
}

impl From<&FockVector> for Wire {
    fn from(v: &FockVector) -> Self {
        let lo_needed = v.coeffs.iter().any(|z| z.re.lo != 0.0 || z.im.lo != 0.0);
        Wire {
            dim: v.dim(),
            re: v.coeffs.iter().map(|z| z.re.hi).collect(),
            im: v.coeffs.iter().map(|z| z.im.hi).collect(),
            re_lo: lo_needed.then(|| v.coeffs.iter().map(|z| z.re.lo).collect()),
            im_lo: lo_needed.then(|| v.coeffs.iter().map(|z| z.im.lo).collect()),
            tail: v.tail,
        }
    }
}

impl TryFrom<Wire> for FockVector {
    type Error = Error;
    fn try_from(w: Wire) -> Result<Self> {
        if w.re.len() != w.dim || w.im.len() != w.dim {
            return Err(Error::Config(format!(
                "vector of dim {} has {} real and {} imaginary parts",
                w.dim,
                w.re.len(),
                w.im.len()
            )));
        }
        let zeros = vec![0.0; w.dim];
        let re_lo = w.re_lo.unwrap_or_else(|| zeros.clone());
        let im_lo = w.im_lo.unwrap_or(zeros);
        if re_lo.len() != w.dim || im_lo.len() != w.dim {
            return Err(Error::Config("low-order parts have the wrong length".into()));
        }
        let coeffs = (0..w.dim)
            .map(|n| Cdd::new(Dd { hi: w.re[n], lo: re_lo[n] }, Dd { hi: w.im[n], lo: im_lo[n] }))
            .collect();
        FockVector::new(coeffs, w.tail)
    }
}

/// `xi_n` in dimension `d`.
pub fn basis_vector(n: usize, d: usize) -> Result<FockVector> {
    if n >= d {
        return Err(Error::IndexOutOfTruncation { index: n, dim: d });
    }
    let mut coeffs = vec![Cdd::ZERO; d];
    coeffs[n] = Cdd::ONE;
    FockVector::new(coeffs, Some(TailBound::zero_from(n + 1)))
}

/// Smallest `(C, r')` with `k * n^p * r^n <= C * r'^n` for all `n`, using
/// `r' = r^(4/5)`.
pub(crate) fn poly_geometric(k: f64, p: f64, r: f64) -> (f64, f64) {
    if r == 0.0 || k == 0.0 {
        return (0.0, 0.0);
    }
    let rp = r.powf(0.8);
    if p <= 0.0 {
        return (k, rp);
    }
    // maximize n^p * r^(n/5) over real n >= 0
    let nstar = p / (0.2 * (1.0 / r).ln());
    let c = k * (p * nstar.ln() + 0.2 * nstar * r.ln()).exp();
    (c.max(k), rp)
}

/// `w_beta = exp(-|beta|^2/2) sum beta^n / sqrt(n!) xi_n`.
pub fn coherent_vector(beta: Complex64, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let trunc = trunc.into();
    if beta == Complex64::new(0.0, 0.0) {
        return resolve(trunc, |d| basis_vector(0, d));
    }
    let b = beta.norm();
    let phase = beta / b;
    // ratio |c_{n+1}/c_n| = |beta|/sqrt(n+1) <= 1/2 from n0 on
    let n0 = (4.0 * b * b).ceil() as usize;
    let ln_mag = |n: usize, ln_fact: f64| -0.5 * b * b + n as f64 * b.ln() - 0.5 * ln_fact;
    let mut ln_fact_n0 = 0.0;
    for k in 1..=n0 {
        ln_fact_n0 += (k as f64).ln();
    }
    let r: f64 = 0.5;
    let ln_c = ln_mag(n0, ln_fact_n0) - n0 as f64 * r.ln();
    if ln_c > 700.0 {
        return Err(Error::Parameter(format!("|beta| = {b} too large for a certified tail")));
    }
    let tail = TailBound { n0, c: ln_c.exp(), r };
    resolve(trunc, |d| {
        let mut coeffs = Vec::with_capacity(d);
        let mut ln_fact = 0.0;
        let mut ph = Complex64::new(1.0, 0.0);
        for n in 0..d {
            if n > 0 {
                ln_fact += (n as f64).ln();
                ph *= phase;
            }
            coeffs.push(Cdd::from(ph * ln_mag(n, ln_fact).exp()));
        }
        FockVector::new(coeffs, Some(tail))
    })
}

/// `a*^j exp(beta a*^2 / 2) Omega`, unnormalized. Requires `|beta| < 1`.
pub fn super_coherent_vector(beta: Complex64, j: usize, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let b = beta.norm();
    if !(b < 1.0) {
        return Err(Error::Domain(format!(
            "exp(beta a*^2/2) Omega is defined only for |beta| < 1, got |beta| = {b}"
        )));
    }
    let trunc = trunc.into();
    let half = Cdd::from(beta * 0.5);
    // |c_{2k}| <= |beta|^k, hence |c_n| <= sqrt|beta|^n; a*^j multiplies the
    // n-th entry by at most n^(j/2)
    let r0 = b.sqrt();
    let tail = if b == 0.0 {
        TailBound::zero_from(j + 1)
    } else if j == 0 {
        TailBound { n0: 0, c: 1.0, r: r0 }
    } else {
        let (c, r) = poly_geometric(r0.powi(-(j as i32)), 0.5 * j as f64, r0);
        TailBound { n0: 0, c, r }
    };
    resolve(trunc, move |d| {
        let mut base = vec![Cdd::ZERO; d];
        let mut c = Cdd::ONE;
        let mut k = 0usize;
        while 2 * k + j < d {
            base[2 * k + j] = c;
            let num = Dd::new(((2 * k + 1) * (2 * k + 2)) as f64).sqrt();
            c = c * half * Cdd::real(num / Dd::new((k + 1) as f64));
            k += 1;
        }
        // a*^j: entry n picks up sqrt(n (n-1) ... (n-j+1))
        for (n, z) in base.iter_mut().enumerate().skip(j) {
            let mut s = Dd::ONE;
            for i in 0..j {
                s *= Dd::new((n - i) as f64);
            }
            *z = z.scale(s.sqrt());
        }
        FockVector::new(base, Some(tail))
    })
}

/// `exp(alpha f_N L*^k) Omega`: coefficient `prod_{i<=j} f(ik) alpha^j / j!` at
/// index `jk`.
pub fn generalized_eigen_vector(
    f: &Weight,
    k: usize,
    alpha: Complex64,
    trunc: impl Into<Truncation>,
) -> Result<FockVector> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let trunc = trunc.into();
    if alpha == Complex64::new(0.0, 0.0) {
        return resolve(trunc, |d| basis_vector(0, d));
    }
    let a = Cdd::from(alpha);
    let step = |j: usize| -> Cdd { f.eval(((j + 1) * k) as i64) * a / Cdd::from_f64((j + 1) as f64) };
    resolve(trunc, |d| {
        let stored = (d - 1) / k + 1;
        let mut coeffs = vec![Cdd::ZERO; d];
        let mut c = Cdd::ONE;
        for j in 0..stored {
            coeffs[j * k] = c;
            c = c * step(j);
        }
        let last = coeffs[(stored - 1) * k].abs();
        if last == 0.0 {
            return FockVector::new(coeffs, Some(TailBound::zero_from((stored - 1) * k)));
        }
        if stored >= 4 {
            let growing = (stored / 2..stored).any(|j| step(j).abs() >= 1.0);
            if growing {
                return Err(Error::Divergent(format!(
                    "coefficient ratio reaches 1 below index {d}; the sequence is not square-summable"
                )));
            }
        }
        // sup of the step ratio over a scan past the truncation
        let j0 = stored - 1;
        let scan_end = j0 + (4 * stored).max(256);
        let big_r = (j0..scan_end).map(|j| step(j).abs()).fold(0.0f64, f64::max);
        if big_r >= 1.0 {
            return Err(Error::Divergent(format!(
                "coefficient ratio {big_r} >= 1 beyond the truncation; no tail certificate"
            )));
        }
        let n0 = j0 * k;
        if big_r == 0.0 {
            return FockVector::new(coeffs, Some(TailBound::zero_from(n0 + 1)));
        }
        let mut r = big_r.powf(1.0 / k as f64);
        if n0 > 0 {
            let floor = ((last.ln() - 700.0) / n0 as f64).exp();
            r = r.max(floor);
        }
        let c_bound = if n0 == 0 { last } else { (last.ln() - n0 as f64 * r.ln()).exp() };
        FockVector::new(coeffs, Some(TailBound { n0, c: c_bound, r }))
    })
}

/// `(1, alpha, alpha^2, ...)`, the eigenvector of `L` at `alpha`.
pub fn geometric_vector(alpha: Complex64, trunc: impl Into<Truncation>) -> Result<FockVector> {
    generalized_eigen_vector(&Weight::identity(), 1, alpha, trunc)
}

/// Linear constraints describing the CCR domains.
#[derive(Clone, Debug)]
pub enum DomainConstraint {
    /// `sum c_n = 0`
    SumZero,
    /// `sum G(n) c_n = 0` with `G(n) = prod_{k<n} g(k)`
    WeightedSumZero(Weight),
    /// `sum_n conj(omega)^n c_{l + m n} = 0` for every `l < m`
    ResidueClassZero { omega: Complex64, m: usize },
    /// Multiple of the geometric vector `(alpha^n)`.
    GeometricEigen(Complex64),
    /// `c_n = 0` for `n > n_max`
    SupportBound(usize),
    All(Vec<DomainConstraint>),
}

impl DomainConstraint {
    fn flatten<'a>(&'a self, out: &mut Vec<&'a DomainConstraint>) {
        match self {
            DomainConstraint::All(list) => list.iter().for_each(|c| c.flatten(out)),
            c => out.push(c),
        }
    }

    /// Functionals `a` (as rows) with the constraint `sum a_n c_n = 0` on the
    /// first `s` coordinates.
    fn rows(&self, s: usize) -> Result<Vec<Vec<Cdd>>> {
        Ok(match self {
            DomainConstraint::SumZero => vec![vec![Cdd::ONE; s]],
            DomainConstraint::WeightedSumZero(g) => {
                let mut row = Vec::with_capacity(s);
                let mut acc = Cdd::ONE;
                for n in 0..s {
                    row.push(acc);
                    let gn = g.eval(n as i64);
                    if gn.is_zero() && n + 1 < s {
                        return Err(Error::Parameter(format!("weight vanishes at n = {n}")));
                    }
                    acc = acc * gn;
                }
                vec![row]
            }
            DomainConstraint::ResidueClassZero { omega, m } => {
                if *m == 0 {
                    return Err(Error::Parameter("m must be positive".into()));
                }
                let wbar = Cdd::from(omega.conj());
                (0..*m)
                    .map(|l| {
                        let mut row = vec![Cdd::ZERO; s];
                        let mut p = Cdd::ONE;
                        let mut idx = l;
                        while idx < s {
                            row[idx] = p;
                            p = p * wbar;
                            idx += m;
                        }
                        row
                    })
                    .collect()
            }
            _ => Vec::new(),
        })
    }

    /// Largest `|sum a_n c_n|` over the linear parts, relative to `||a||`.
    pub fn residual(&self, v: &FockVector) -> Result<f64> {
        let mut parts = Vec::new();
        self.flatten(&mut parts);
        let mut worst = 0.0f64;
        for c in parts {
            match c {
                DomainConstraint::SupportBound(nmax) => {
                    let tail: f64 = v.coeffs().iter().skip(nmax + 1).map(|z| z.abs()).sum();
                    worst = worst.max(tail);
                }
                DomainConstraint::GeometricEigen(alpha) => {
                    let g = geometric_vector(*alpha, v.dim())?;
                    let p = g.inner_dd(v)?;
                    let gn = g.norm_sqr_dd();
                    let proj = g.scale_dd(p / Cdd::real(gn));
                    worst = worst.max(v.sub(&proj)?.norm());
                }
                c => {
                    for row in c.rows(v.dim())? {
                        let s = row.iter().zip(v.coeffs()).fold(Cdd::ZERO, |acc, (a, x)| acc + *a * *x);
                        let an = row.iter().fold(Dd::ZERO, |acc, a| acc + a.norm_sqr()).to_f64().sqrt();
                        worst = worst.max(s.abs() / an.max(f64::MIN_POSITIVE));
                    }
                }
            }
        }
        Ok(worst)
    }
}

fn inner_slices(a: &[Cdd], b: &[Cdd]) -> Cdd {
    a.iter().zip(b).fold(Cdd::ZERO, |acc, (x, y)| acc + x.conj() * *y)
}

fn norm_slice(a: &[Cdd]) -> Dd {
    a.iter().fold(Dd::ZERO, |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Deterministic unit vector satisfying `constraint`, supported in the first
/// `d/2` coordinates unless the constraint needs more.
pub fn ccr_domain_sample(constraint: &DomainConstraint, seed: u64, d: usize) -> Result<FockVector> {
    if d == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let mut parts = Vec::new();
    constraint.flatten(&mut parts);
    let mut s = (d / 2).max(1);
    let mut geometric = None;
    for c in &parts {
        match c {
            DomainConstraint::SupportBound(nmax) => s = s.min(nmax + 1),
            DomainConstraint::GeometricEigen(alpha) => {
                if geometric.is_some_and(|g| g != *alpha) {
                    return Err(Error::Unsatisfiable("two distinct eigenvalues of L requested".into()));
                }
                geometric = Some(*alpha);
            }
            _ => {}
        }
    }
    let mut rng = rng::stream(seed, 0x0f0c);

    if let Some(alpha) = geometric {
        let support_limited = parts.iter().any(|c| matches!(c, DomainConstraint::SupportBound(_)));
        if support_limited && alpha != Complex64::new(0.0, 0.0) {
            return Err(Error::Unsatisfiable("a geometric eigenvector has infinite support".into()));
        }
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = geometric_vector(alpha, d)?.normalized()?.scale(Complex64::from_polar(1.0, theta));
        let linear = DomainConstraint::All(
            parts
                .iter()
                .filter(|c| !matches!(c, DomainConstraint::GeometricEigen(_) | DomainConstraint::SupportBound(_)))
                .map(|c| (*c).clone())
                .collect(),
        );
        if linear.residual(&v)? > 1e-12 {
            return Err(Error::Unsatisfiable(format!(
                "the eigenvector of L at {alpha} violates the remaining constraints"
            )));
        }
        return Ok(v);
    }

    // orthonormal basis of span{conj(a)} over the support
    let mut basis: Vec<Vec<Cdd>> = Vec::new();
    for c in &parts {
        for row in c.rows(s)? {
            let mut u: Vec<Cdd> = row.iter().map(|z| z.conj()).collect();
            let n0 = norm_slice(&u).to_f64();
            if n0 == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for b in &basis {
                    let p = inner_slices(b, &u);
                    for (x, y) in u.iter_mut().zip(b) {
                        *x -= p * *y;
                    }
                }
            }
            let n = norm_slice(&u);
            if n.to_f64() <= 1e-13 * n0 {
                continue;
            }
            let inv = n.recip();
            u.iter_mut().for_each(|z| *z = z.scale(inv));
            basis.push(u);
        }
    }
    if basis.len() >= s {
        return Err(Error::Unsatisfiable(format!(
            "{} independent constraints leave no room on a support of size {s}",
            basis.len()
        )));
    }
    let mut x: Vec<Cdd> = (0..s)
        .map(|_| Cdd::from(Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let x_norm = norm_slice(&x).to_f64();
    for _ in 0..2 {
        for b in &basis {
            let p = inner_slices(b, &x);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= p * *bi;
            }
        }
    }
    let n = norm_slice(&x);
    if n.to_f64() <= 1e-8 * x_norm {
        return Err(Error::Unsatisfiable("projection onto the constraint space is degenerate".into()));
    }
    let inv = n.recip();
    let mut coeffs: Vec<Cdd> = x.into_iter().map(|z| z.scale(inv)).collect();
    coeffs.resize(d, Cdd::ZERO);
    FockVector::new(coeffs, Some(TailBound::zero_from(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_vectors() {
        let v = basis_vector(0, 4).unwrap();
        assert_eq!(v.to_c64(), vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let v = basis_vector(2, 4).unwrap();
        assert_eq!(v.coeff(2), c(1.0, 0.0));
        assert_eq!(v.tail(), Some(TailBound::zero_from(3)));
        assert_eq!(basis_vector(5, 4), Err(Error::IndexOutOfTruncation { index: 5, dim: 4 }));
    }

    #[test]
    fn coherent_at_zero_is_ground_state() {
        assert_eq!(coherent_vector(c(0.0, 0.0), 8).unwrap(), basis_vector(0, 8).unwrap());
    }

    #[test]
    fn coherent_is_normalized() {
        let v = coherent_vector(c(1.0, 0.0), Truncation::auto()).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let v = coherent_vector(c(-1.5, 1.2), Truncation::auto()).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(v.tail_norm() < 1e-14);
    }

    #[test]
    fn super_coherent_degenerate_and_domain() {
        assert_eq!(super_coherent_vector(c(0.0, 0.0), 0, 8).unwrap(), basis_vector(0, 8).unwrap());
        assert!(matches!(super_coherent_vector(c(1.0, 0.0), 0, 8), Err(Error::Domain(_))));
        assert!(matches!(super_coherent_vector(c(0.0, 1.2), 0, 8), Err(Error::Domain(_))));
    }

    #[test]
    fn super_coherent_norm_at_point_six() {
        let v = super_coherent_vector(c(0.6, 0.0), 0, Truncation::auto()).unwrap();
        assert!((v.norm_sqr() - 1.25).abs() < 1e-12, "{}", v.norm_sqr());
    }

    #[test]
    fn super_coherent_first_coefficients() {
        // c_2 = (b/2) sqrt(2), c_4 = (b/2)^2 sqrt(24)/2
        let b = 0.5;
        let v = super_coherent_vector(c(b, 0.0), 0, 16).unwrap();
        assert_eq!(v.coeff(1), c(0.0, 0.0));
        assert!((v.coeff(2).re - 0.25 * 2f64.sqrt()).abs() < 1e-16);
        assert!((v.coeff(4).re - 0.0625 * 24f64.sqrt() / 2.0).abs() < 1e-16);
    }

    #[test]
    fn super_coherent_with_creation_power() {
        let b = 0.4;
        let v0 = super_coherent_vector(c(b, 0.0), 0, 32).unwrap();
        let v1 = super_coherent_vector(c(b, 0.0), 1, 32).unwrap();
        for n in 1..32 {
            let want = v0.coeff(n - 1) * (n as f64).sqrt();
            assert!((v1.coeff(n) - want).norm() < 1e-15);
        }
        let t = v1.tail().unwrap();
        for n in 0..32 {
            assert!(t.bounds(n, v1.coeff(n).norm()));
        }
        let zero = super_coherent_vector(c(0.0, 0.0), 3, 8).unwrap();
        assert!((zero.coeff(3).re - 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn geometric_and_generalized() {
        let v = generalized_eigen_vector(&Weight::identity(), 1, c(0.5, 0.0), 16).unwrap();
        for n in 0..16 {
            assert_eq!(v.coeff(n), c(0.5f64.powi(n as i32), 0.0));
        }
        let v = generalized_eigen_vector(&Weight::identity(), 2, c(0.25, 0.0), 32).unwrap();
        for n in 0..32 {
            let want = if n % 2 == 0 { 0.5f64.powi(n as i32 / 2) } else { 0.0 };
            assert!((v.coeff(n).re - want).abs() < 1e-16);
        }
        let alpha = c(0.3, -0.4);
        let v = generalized_eigen_vector(&Weight::one(), 1, alpha, 12).unwrap();
        let mut fact = 1.0;
        for n in 0..12 {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((v.coeff(n) - alpha.powu(n as u32) / fact).norm() < 1e-16);
        }
    }

    #[test]
    fn generalized_rejects_growth() {
        let sq = Weight::new("n^2", |n| c((n * n) as f64, 0.0));
        assert!(matches!(
            generalized_eigen_vector(&sq, 1, c(0.5, 0.0), 64),
            Err(Error::Divergent(_))
        ));
        assert!(matches!(
            generalized_eigen_vector(&Weight::identity(), 1, c(1.0, 0.0), 64),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn auto_truncation_is_minimal() {
        let eps = 1e-10;
        let v = geometric_vector(c(0.5, 0.0), Truncation::Auto(eps)).unwrap();
        assert!(v.tail_norm() < eps);
        let shorter = geometric_vector(c(0.5, 0.0), v.dim() - 1).unwrap();
        assert!(shorter.tail_norm() >= eps);
    }

    #[test]
    fn sum_zero_sample() {
        let v = ccr_domain_sample(&DomainConstraint::SumZero, 3, 64).unwrap();
        let s = v.coeffs().iter().fold(Cdd::ZERO, |a, z| a + *z);
        assert!(s.abs() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!(v.support_end() <= 32);
        assert!(matches!(
            ccr_domain_sample(&DomainConstraint::SumZero, 3, 1),
            Err(Error::Unsatisfiable(_))
        ));
    }

    #[test]
    fn residue_class_sample() {
        let w = c(0.0, 1.0);
        let con = DomainConstraint::ResidueClassZero { omega: w, m: 2 };
        let v = ccr_domain_sample(&con, 11, 64).unwrap();
        for l in 0..2 {
            let mut s = c(0.0, 0.0);
            let mut n = 0;
            while l + 2 * n < 64 {
                s += w.conj().powu(n as u32) * v.coeff(l + 2 * n);
                n += 1;
            }
            assert!(s.norm() < 1e-15, "l={l} s={s}");
        }
        assert!(con.residual(&v).unwrap() < 1e-15);
    }

    #[test]
    fn geometric_sample_is_eigenvector_multiple() {
        let v = ccr_domain_sample(&DomainConstraint::GeometricEigen(c(0.3, 0.0)), 5, 64).unwrap();
        let ratio = v.coeff(1) / v.coeff(0);
        assert!((ratio - c(0.3, 0.0)).norm() < 1e-15);
        for n in 1..20 {
            assert!((v.coeff(n) - v.coeff(n - 1) * 0.3).norm() < 1e-15);
        }
        let bad = DomainConstraint::All(vec![
            DomainConstraint::GeometricEigen(c(0.3, 0.0)),
            DomainConstraint::SumZero,
        ]);
        assert!(matches!(ccr_domain_sample(&bad, 1, 64), Err(Error::Unsatisfiable(_))));
    }

    #[test]
    fn weighted_and_conjunction_samples() {
        let g = Weight::new("phase", |n| Complex64::from_polar(1.0, 0.3 * n as f64));
        let con = DomainConstraint::All(vec![
            DomainConstraint::WeightedSumZero(g.clone()),
            DomainConstraint::SumZero,
            DomainConstraint::SupportBound(9),
        ]);
        let v = ccr_domain_sample(&con, 9, 64).unwrap();
        assert!(v.support_end() <= 10);
        assert!(con.residual(&v).unwrap() < 1e-15);
        let tight = DomainConstraint::All(vec![
            DomainConstraint::ResidueClassZero { omega: c(1.0, 0.0), m: 3 },
            DomainConstraint::SupportBound(2),
        ]);
        assert!(matches!(ccr_domain_sample(&tight, 0, 64), Err(Error::Unsatisfiable(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let v = super_coherent_vector(c(0.3, 0.2), 1, 20).unwrap();
        let back = FockVector::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
        let j: serde_json::Value = serde_json::from_str(&basis_vector(1, 3).unwrap().to_json()).unwrap();
        assert_eq!(j["dim"], 3);
        assert_eq!(j["re"][1], 1.0);
        assert_eq!(j["tail"]["n0"], 2);
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_slot() {
        let u = FockVector::from_c64(&[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        let v = FockVector::from_c64(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(u.inner(&v).unwrap(), c(0.0, -1.0));
        let z = c(0.2, 0.7);
        assert!((u.scale(z).inner(&v).unwrap() - z.conj() * u.inner(&v).unwrap()).norm() < 1e-16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn super_coherent_norm_matches_closed_form(b in 0.0f64..0.9, th in 0.0f64..6.28) {
            let beta = Complex64::from_polar(b, th);
            let v = super_coherent_vector(beta, 0, Truncation::auto()).unwrap();
            let want = (1.0 - b * b).powf(-0.5);
            prop_assert!((v.norm_sqr() - want).abs() / want < 1e-8);
        }

        #[test]
        fn stored_coefficients_respect_tail(b in 0.0f64..0.95, j in 0usize..4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let v = super_coherent_vector(c(b, 0.0), j, 128).unwrap();
            let t = v.tail().unwrap();
            for n in 0..128 {
                prop_assert!(t.bounds(n, v.coeff(n).norm()));
            }
            let w = coherent_vector(c(re, im), 96).unwrap();
            let t = w.tail().unwrap();
            for n in 0..96 {
                prop_assert!(t.bounds(n, w.coeff(n).norm()));
            }
        }

        #[test]
        fn samples_are_deterministic(seed in any::<u64>(), d in 4usize..80) {
            let a = ccr_domain_sample(&DomainConstraint::SumZero, seed, d).unwrap();
            let b = ccr_domain_sample(&DomainConstraint::SumZero, seed, d).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
