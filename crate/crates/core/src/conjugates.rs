//! Conjugate operators of `N`: the `T_{omega,m}` family, Galapon's operator
//! and its weighted variants, the polynomial operators `X_p` and the angle
//! operators.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::fock::{generalized_eigen_vector, geometric_vector, super_coherent_vector, FockVector, Truncation};
use crate::operators::{make, sample_growth, shift_power, weighted_shift, Band, BandedOperator, OperatorKind};
use crate::opfunc::{principal_ln, principal_log_apply, series_apply, SeriesKind, SeriesPolicy, SeriesReport};
use crate::weight::Weight;

const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Zero,
    OpenDisc,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CcrDomain {
    InfiniteDim,
    FiniteDim,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub bounded: bool,
    pub ccr_domain: CcrDomain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateFamily {
    pub omega: Complex64,
    pub m: usize,
    pub classification: Family,
    pub expected: Expected,
}

/// Classification of `T_{omega,m}` by `|omega|`.
pub fn classify(omega: Complex64, m: usize) -> Result<ConjugateFamily> {
    if m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    let r = omega.norm();
    let (classification, bounded, ccr_domain) = if r == 0.0 {
        (Family::Zero, false, CcrDomain::InfiniteDim)
    } else if r < 1.0 - UNIT_TOL {
        (Family::OpenDisc, false, CcrDomain::FiniteDim)
    } else if r <= 1.0 + UNIT_TOL {
        (Family::Boundary, true, CcrDomain::Dense)
    } else {
        return Err(Error::Parameter(format!(
            "|omega| = {r} > 1 lies outside the family; see dunford_log"
        )));
    };
    Ok(ConjugateFamily { omega, m, classification, expected: Expected { bounded, ccr_domain } })
}

/// `T_{omega,m} = (i/m) log(omega - L^m)`, applied vector-wise.
///
/// The zero family uses `log L^m` as its inner logarithm.
#[derive(Clone, Debug)]
pub struct ConjugateOperator {
    pub family: ConjugateFamily,
    dim: usize,
    inner: BandedOperator,
    lm: BandedOperator,
}

pub fn conjugate_operator(omega: Complex64, m: usize, dim: usize) -> Result<ConjugateOperator> {
    let family = classify(omega, m)?;
    let lm = shift_power(m as i64, dim);
    let inner = match family.classification {
        Family::Zero => lm.clone(),
        _ => make(OperatorKind::Identity, dim).scaled(Cdd::from(omega)).add_scaled(-Cdd::ONE, &lm)?,
    };
    Ok(ConjugateOperator { family, dim, inner, lm })
}

impl ConjugateOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `omega - L^m` (or `L^m` for the zero family).
    pub fn inner(&self) -> &BandedOperator {
        &self.inner
    }

    /// The logarithm: principal Log on the boundary, the series log otherwise.
    pub fn apply_log(&self, v: &FockVector, policy: &SeriesPolicy) -> Result<(FockVector, SeriesReport)> {
        match self.family.classification {
            Family::Boundary => principal_log_apply(self.family.omega, &self.lm, v, policy),
            _ => series_apply(SeriesKind::Log, &self.inner, v, policy),
        }
    }

    /// `(i/m) log(...) v`
    pub fn apply(&self, v: &FockVector, policy: &SeriesPolicy) -> Result<(FockVector, SeriesReport)> {
        let (w, rep) = self.apply_log(v, policy)?;
        Ok((w.scale(Complex64::new(0.0, 1.0 / self.family.m as f64)), rep))
    }

    /// Dense bounded form; only the boundary family has one.
    pub fn dense_form(&self) -> Result<BandedOperator> {
        match self.family.classification {
            Family::Boundary => boundary_operator(self.family.omega, self.family.m, self.dim),
            _ => Err(Error::Domain(
                "unbounded families have no matrix representation; apply them to admissible vectors".into(),
            )),
        }
    }
}

/// `L_{m,omega} = (i/m)(Log(omega - L^m) - Log(conj(omega) - L*^m))` for
/// `|omega| = 1`: band `+mk` is `-(i/m) conj(omega)^k / k`, band `-mk` is
/// `(i/m) omega^k / k`.
pub fn boundary_operator(omega: Complex64, m: usize, dim: usize) -> Result<BandedOperator> {
    if m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    if (omega.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Parameter(format!("boundary family needs |omega| = 1, got {}", omega.norm())));
    }
    let im = Cdd::new(Dd::ZERO, Dd::ONE / Dd::new(m as f64));
    let diag = Complex64::new(0.0, 1.0 / m as f64) * (principal_ln(omega) - principal_ln(omega.conj()));
    let mut op = BandedOperator::empty(dim);
    if diag != Complex64::new(0.0, 0.0) {
        op = op.with_band(0, Band::constant(Cdd::from(diag)));
    }
    let w = Cdd::from(omega);
    let mut wk = Cdd::ONE;
    let mut k = 1usize;
    while m * k < dim {
        wk = wk * w;
        let kk = Cdd::from_f64(k as f64);
        op = op.with_band((m * k) as i64, Band::constant(-(im * wk.conj()) / kk));
        op = op.with_band(-((m * k) as i64), Band::constant(im * wk / kk));
        k += 1;
    }
    Ok(op)
}

/// Galapon's operator, entry `(n, m) = i/(n - m)` off the diagonal.
pub fn galapon_operator(dim: usize) -> BandedOperator {
    let mut op = BandedOperator::empty(dim);
    for d in 1..dim as i64 {
        // entry (n, n+d) = i/(-d)
        op = op.with_band(d, Band::constant(Cdd::I / Cdd::from_f64(-d as f64)));
        op = op.with_band(-d, Band::constant(Cdd::I / Cdd::from_f64(d as f64)));
    }
    op
}

/// The same operator summed as `i sum_k (1/k)(L*^k - L^k)`.
pub fn galapon_series_form(dim: usize) -> Result<BandedOperator> {
    let mut op = BandedOperator::empty(dim);
    for k in 1..dim as i64 {
        let c = Cdd::I / Cdd::from_f64(k as f64);
        op = op.add_scaled(c, &shift_power(-k, dim))?;
        op = op.add_scaled(-c, &shift_power(k, dim))?;
    }
    Ok(op)
}

/// `T_{1,1} = i log(1 - L)` as a dense band operator.
pub fn t11_operator(dim: usize) -> BandedOperator {
    let mut op = BandedOperator::empty(dim);
    for k in 1..dim as i64 {
        op = op.with_band(k, Band::constant(-Cdd::I / Cdd::from_f64(k as f64)));
    }
    op
}

/// `G(n) = prod_{k<n} g(k)` for `n <= len`.
fn cumulative(g: &Weight, len: usize) -> Vec<Cdd> {
    let mut out = Vec::with_capacity(len + 1);
    let mut acc = Cdd::ONE;
    out.push(acc);
    for n in 0..len {
        acc = acc * g.eval(n as i64);
        out.push(acc);
    }
    out
}

#[derive(Clone, Debug)]
pub struct WeightedGalapon {
    pub operator: BandedOperator,
    /// Least-squares exponent of `prod_{k<=n} |g_k|` against `n`.
    pub growth_exponent: Option<f64>,
    pub warnings: Vec<String>,
}

/// `L_g = i{log(1 - g_N L) - log(1 - L* g_N^{-1})}`, optionally symmetrized
/// as `(L_g + L_g*)/2`.
pub fn weighted_galapon(g: &Weight, dim: usize, symmetrize: bool) -> Result<WeightedGalapon> {
    for n in 0..dim {
        if g.eval(n as i64).is_zero() {
            return Err(Error::Parameter(format!("weight g vanishes at n = {n}")));
        }
    }
    let span = 2 * dim + 2;
    let big_g = std::sync::Arc::new(cumulative(g, span));
    let mut op = BandedOperator::empty(dim);
    for k in 1..dim {
        let kk = Cdd::from_f64(k as f64);
        let (gu, gl, gg) = (std::sync::Arc::clone(&big_g), std::sync::Arc::clone(&big_g), g.clone());
        let gg2 = g.clone();
        // band +k at row n: -(i/k) prod_{l=n}^{n+k-1} g(l) = -(i/k) G(n+k)/G(n)
        let up = move |n: usize| {
            let p = if n + k < gu.len() {
                gu[n + k] / gu[n]
            } else {
                (n..n + k).fold(Cdd::ONE, |a, l| a * gg.eval(l as i64))
            };
            -(Cdd::I * p) / kk
        };
        // band -k at row n >= k: (i/k) prod_{l=n-k}^{n-1} 1/g(l) = (i/k) G(n-k)/G(n)
        let down = move |n: usize| {
            if n < k {
                return Cdd::ZERO;
            }
            let p = if n < gl.len() {
                gl[n - k] / gl[n]
            } else {
                (n - k..n).fold(Cdd::ONE, |a, l| a / gg2.eval(l as i64))
            };
            (Cdd::I * p) / kk
        };
        op = op.with_band(k as i64, Band::new(up, None));
        op = op.with_band(-(k as i64), Band::new(down, None));
    }
    let mut warnings = Vec::new();
    let mut growth_exponent = None;
    if symmetrize {
        let adj = op.adjoint();
        op = op.scaled(Cdd::from_f64(0.5)).add_scaled(Cdd::from_f64(0.5), &adj)?;
        let fit = growth_fit(g, dim);
        growth_exponent = Some(fit);
        if !(fit > -0.5 && fit < 0.5) {
            warnings.push(format!(
                "prod |g_k| grows like n^{fit:.3}; the symmetrized operator needs an exponent in (-1/2, 1/2)"
            ));
        }
    }
    Ok(WeightedGalapon { operator: op, growth_exponent, warnings })
}

/// Slope of `log prod_{k<=n} |g_k|` against `log n` over `n` in `[D/8, D]`.
pub fn growth_fit(g: &Weight, dim: usize) -> f64 {
    let lo = (dim / 8).max(2);
    let mut acc = 0.0f64;
    let mut pts = Vec::new();
    for n in 0..=dim {
        acc += g.eval(n as i64).abs().ln();
        if n >= lo {
            pts.push(((n as f64).ln(), acc));
        }
    }
    let k = pts.len() as f64;
    if k < 2.0 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `V = diag(G(n))` with `G(n) = prod_{k<n} g(k)`, so that
/// `g_N L = V^{-1} L V`.
pub fn gauge_diagonal(g: &Weight, dim: usize) -> BandedOperator {
    let big_g = cumulative(g, dim + 1);
    let gg = g.clone();
    BandedOperator::empty(dim).with_band(
        0,
        Band::new(
            move |n| {
                if n < big_g.len() {
                    big_g[n]
                } else {
                    (0..n).fold(Cdd::ONE, |a, l| a * gg.eval(l as i64))
                }
            },
            None,
        ),
    )
}

/// Coefficients `p_0, ..., p_m` of `p` with its roots of `1 - p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySpec {
    pub coeffs: Vec<Complex64>,
    pub roots_of_one_minus_p: Vec<Complex64>,
    pub degree: usize,
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Roots of `sum c_j z^j` by Aberth iteration, with near-coincident roots
/// replaced by their cluster mean (recovers multiple roots to full accuracy).
pub fn polynomial_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c: Vec<Complex64> = c.to_vec();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    if c.len() < 2 {
        return Err(Error::Parameter("polynomial must have positive degree".into()));
    }
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|z| z / lead).collect();
    let deriv: Vec<Complex64> = (1..=n).map(|j| monic[j] * j as f64).collect();
    let radius = 1.0 + monic[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let p = horner(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / horner(&deriv, z[i]);
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm());
            }
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    // cluster averaging
    let mut used = vec![false; n];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = (i..n).filter(|&j| !used[j] && (z[j] - z[i]).norm() < 1e-5).collect();
        let mut mean = members.iter().map(|&j| z[j]).sum::<Complex64>() / members.len() as f64;
        // a root of multiplicity k is a simple root of the (k-1)th derivative
        let mut dk = monic.clone();
        for _ in 1..members.len() {
            dk = (1..dk.len()).map(|j| dk[j] * j as f64).collect();
        }
        let dk1: Vec<Complex64> = (1..dk.len()).map(|j| dk[j] * j as f64).collect();
        for _ in 0..8 {
            let step = horner(&dk, mean) / horner(&dk1, mean);
            if !step.is_finite() {
                break;
            }
            mean -= step;
        }
        for &j in &members {
            used[j] = true;
            out[j] = mean;
        }
    }
    Ok(out)
}

impl PolySpec {
    pub fn new(coeffs: &[Complex64]) -> Result<Self> {
        let mut q: Vec<Complex64> = coeffs.iter().map(|z| -z).collect();
        if q.is_empty() {
            return Err(Error::Parameter("empty polynomial".into()));
        }
        q[0] += 1.0;
        let roots = polynomial_roots(&q)?;
        let degree = roots.len();
        for &a in &roots {
            let r = horner(&q, a).norm();
            if r > 1e-10 {
                return Err(Error::Parameter(format!("root {a} leaves |1 - p| = {r}")));
            }
        }
        Ok(PolySpec { coeffs: coeffs[..=degree].to_vec(), roots_of_one_minus_p: roots, degree })
    }

    /// `p(z) = omega z^m`
    pub fn monomial(omega: Complex64, m: usize) -> Result<Self> {
        let mut c = vec![Complex64::new(0.0, 0.0); m + 1];
        c[m] = omega;
        PolySpec::new(&c)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }
}

/// `X_p = log(1 - p(L)) - log(1 - p(L)*)` with every root of `1 - p` on the
/// unit circle.
#[derive(Clone, Debug)]
pub struct PolyTimeOperator {
    pub spec: PolySpec,
    pub p0: Complex64,
    dim: usize,
}

pub fn poly_time_operator(spec: PolySpec, dim: usize) -> Result<PolyTimeOperator> {
    for &a in &spec.roots_of_one_minus_p {
        if (a.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Hypothesis(format!(
                "root {a} of 1 - p has modulus {}, not on the unit circle",
                a.norm()
            )));
        }
    }
    let p0 = spec.coeffs[0];
    Ok(PolyTimeOperator { spec, p0, dim })
}

impl PolyTimeOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.spec.degree
    }

    /// `p(0) != 1` keeps `1 - p(L)` injective.
    pub fn injective(&self) -> bool {
        (Complex64::new(1.0, 0.0) - self.p0).norm() > 1e-12
    }

    /// Taylor coefficients of `log(1 - p(z))`.
    pub fn log_coefficients(&self, n: usize) -> Vec<Complex64> {
        let mut c = Vec::with_capacity(n);
        c.push(principal_ln(Complex64::new(1.0, 0.0) - self.p0));
        for j in 1..n {
            let s: Complex64 = self.spec.roots_of_one_minus_p.iter().map(|a| a.powi(-(j as i32))).sum();
            c.push(-s / j as f64);
        }
        c
    }

    /// Toeplitz form `sum c_j L^j - sum conj(c_j) L*^j`.
    pub fn dense(&self) -> BandedOperator {
        let c = self.log_coefficients(self.dim);
        let mut op = BandedOperator::empty(self.dim);
        let diag = c[0] - c[0].conj();
        if diag != Complex64::new(0.0, 0.0) {
            op = op.with_band(0, Band::constant(Cdd::from(diag)));
        }
        for (j, &cj) in c.iter().enumerate().skip(1) {
            op = op.with_band(j as i64, Band::constant(Cdd::from(cj)));
            op = op.with_band(-(j as i64), Band::constant(Cdd::from(-cj.conj())));
        }
        op
    }

    /// `(i/m) X_p`
    pub fn time_operator(&self) -> BandedOperator {
        self.dense().scaled(Cdd::from(Complex64::new(0.0, 1.0 / self.degree() as f64)))
    }

    fn guard(&self, psi: &FockVector, extra: usize) -> Result<()> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: psi.dim() });
        }
        if psi.support_end() + extra > self.dim {
            return Err(Error::Guard(format!(
                "support {} plus {extra} raising steps exceeds dimension {}",
                psi.support_end(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Largest residual of `(a - L)(L* psi) = (a L* - 1) psi` and
    /// `(1/a - L*)(-a psi) = (a L* - 1) psi` over the roots `a`.
    pub fn forward_identity_residual(&self, psi: &FockVector) -> Result<f64> {
        self.guard(psi, 1)?;
        let l = make(OperatorKind::LeftShift, self.dim);
        let ls = make(OperatorKind::RightShift, self.dim);
        let mut worst = 0.0f64;
        for &a in &self.spec.roots_of_one_minus_p {
            let ad = Cdd::from(a);
            let lspsi = ls.apply(psi)?;
            let rhs = lspsi.scale_dd(ad).sub(psi)?;
            let lhs1 = lspsi.scale_dd(ad).sub(&l.apply(&lspsi)?)?;
            let mpsi = psi.scale_dd(-ad);
            let lhs2 = mpsi.scale_dd(ad.recip()).sub(&ls.apply(&mpsi)?)?;
            worst = worst.max(lhs1.distance(&rhs)?).max(lhs2.distance(&rhs)?);
        }
        Ok(worst)
    }

    /// `phi = prod_i (a_i L* - 1) psi`, a CCR-domain vector of `X_p`.
    pub fn domain_vector(&self, psi: &FockVector) -> Result<FockVector> {
        self.guard(psi, self.degree())?;
        let ls = make(OperatorKind::RightShift, self.dim);
        let mut phi = psi.clone();
        for &a in &self.spec.roots_of_one_minus_p {
            phi = ls.apply(&phi)?.scale(a).sub(&phi)?;
        }
        Ok(phi)
    }

    /// Eigenvalue of `[N, X_p]` on domain vectors.
    pub fn expected_commutator(&self) -> Complex64 {
        Complex64::new(-(self.degree() as f64), 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleVariant {
    S0,
    S1,
}

/// `(i/2) log(g_{N+2} L^2)` with `g_{N+2} = sqrt((N+2)/(N+1))` (S0) or its
/// inverse (S1).
#[derive(Clone, Debug)]
pub struct AngleOperator {
    pub variant: AngleVariant,
    inner: BandedOperator,
}

pub fn angle_operator(variant: AngleVariant, dim: usize) -> Result<AngleOperator> {
    if dim < 4 {
        return Err(Error::Parameter(format!("angle operators need D >= 4, got {dim}")));
    }
    let g = match variant {
        AngleVariant::S0 => Weight::angle_even(),
        AngleVariant::S1 => Weight::angle_odd(),
    };
    Ok(AngleOperator { variant, inner: weighted_shift(&g, 2, 2, dim) })
}

impl AngleOperator {
    pub fn inner(&self) -> &BandedOperator {
        &self.inner
    }

    /// Eigenvector of the inner operator at `beta`: `e^{beta a*^2/2} Omega`
    /// (S0) or `a* e^{beta a*^2/2} Omega` (S1).
    pub fn eigenvector(&self, beta: Complex64, trunc: impl Into<Truncation>) -> Result<FockVector> {
        let j = match self.variant {
            AngleVariant::S0 => 0,
            AngleVariant::S1 => 1,
        };
        super_coherent_vector(beta, j, trunc)
    }

    pub fn apply_log(&self, v: &FockVector, policy: &SeriesPolicy) -> Result<(FockVector, SeriesReport)> {
        series_apply(SeriesKind::Log, &self.inner, v, policy)
    }

    pub fn apply(&self, v: &FockVector, policy: &SeriesPolicy) -> Result<(FockVector, SeriesReport)> {
        let (w, r) = self.apply_log(v, policy)?;
        Ok((w.scale(Complex64::new(0.0, 0.5)), r))
    }
}

/// Rayleigh quotients `(psi_b, log(Y) psi_b)/||psi_b||^2 = log b` for
/// decreasing `b`; they run off to minus infinity.
pub fn unboundedness_witness(betas: &[f64], dim: usize) -> Result<Vec<(f64, f64)>> {
    let s0 = angle_operator(AngleVariant::S0, dim)?;
    let pol = SeriesPolicy::default();
    betas
        .iter()
        .map(|&b| {
            let v = s0.eigenvector(Complex64::new(b, 0.0), dim)?;
            let (w, _) = s0.apply_log(&v, &pol)?;
            Ok((b, (v.inner(&w)? / v.norm_sqr()).re))
        })
        .collect()
}

/// `(f, g, beta)` with `g(n+2) f(n+2) - g(n) f(n) = beta` on even `n`.
#[derive(Clone, Debug)]
pub struct AnglePairing {
    pub f: Weight,
    pub g: Weight,
    pub beta: Complex64,
    /// User-supplied radius `M_f`; estimated when absent.
    pub radius: Option<f64>,
}

impl AnglePairing {
    /// The pairing reproducing `S0`: `f = sqrt(n(n-1))`, `g = sqrt(n/(n-1))`,
    /// `beta = 2`.
    pub fn s0() -> Self {
        AnglePairing {
            f: Weight::sqrt_falling2(),
            g: Weight::angle_even(),
            beta: Complex64::new(2.0, 0.0),
            radius: Some(0.5),
        }
    }

    /// `|1 - alpha beta| < 1` and `|alpha| < M_f`.
    pub fn admissible(&self, alpha: Complex64, radius: f64) -> bool {
        (Complex64::new(1.0, 0.0) - alpha * self.beta).norm() < 1.0 && alpha.norm() < radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub passed: bool,
    pub first_failure: Option<usize>,
    pub max_defect: f64,
    /// `g(2) f(2)`, which must equal `beta`.
    pub beta_at_zero: Complex64,
    /// `M_f = lim n/|f(2n)|`, possibly infinite.
    pub radius: f64,
    /// True when no `alpha` satisfies both admissibility conditions.
    pub admissible_region_empty: bool,
}

/// Estimate of `lim n/|f(2n)|` from a dyadic ladder.
pub fn estimate_radius(f: &Weight) -> f64 {
    let ratio = |n: f64| n / f.eval(2 * n as i64).abs();
    let ladder: Vec<f64> = (10..=24).map(|e| ratio((1u64 << e) as f64)).collect();
    let last = ladder[ladder.len() - 1];
    let prev = ladder[ladder.len() - 2];
    if !last.is_finite() || last > 1e12 {
        return f64::INFINITY;
    }
    if last < 1e-9 {
        return 0.0;
    }
    // decaying or growing like a power of n: the limit is 0 or infinite
    if last / prev < 0.75 {
        return 0.0;
    }
    if last / prev > 1.33 {
        return f64::INFINITY;
    }
    // Richardson step assuming an O(1/n) correction
    2.0 * last - prev
}

pub fn pairing_check(pair: &AnglePairing, n_max: usize) -> PairingReport {
    let gf = |n: usize| pair.g.eval(n as i64).to_c64() * pair.f.eval(n as i64).to_c64();
    let beta_at_zero = gf(2);
    let scale = 1.0 + pair.beta.norm();
    let mut max_defect = (beta_at_zero - pair.beta).norm();
    let mut first_failure = (max_defect > 1e-10 * scale).then_some(0);
    let mut n = 2;
    while n <= n_max {
        let lhs = gf(n + 2) - gf(n);
        let defect = (lhs - pair.beta).norm() / (1.0 + gf(n).norm()).max(scale);
        max_defect = max_defect.max(defect);
        if defect > 1e-10 && first_failure.is_none() {
            first_failure = Some(n);
        }
        n += 2;
    }
    let radius = pair.radius.unwrap_or_else(|| estimate_radius(&pair.f));
    PairingReport {
        passed: first_failure.is_none(),
        first_failure,
        max_defect,
        beta_at_zero,
        radius,
        admissible_region_empty: radius == 0.0 || pair.beta.norm() == 0.0,
    }
}

/// `(i/2) log(g_{N+2} L^2)` built from a verified pairing, with its domain
/// families.
#[derive(Clone, Debug)]
pub struct GeneralAngle {
    pub pair: AnglePairing,
    pub report: PairingReport,
    inner: BandedOperator,
    dim: usize,
}

pub fn general_angle_builder(pair: AnglePairing, dim: usize) -> Result<GeneralAngle> {
    let report = pairing_check(&pair, dim);
    if let Some(n) = report.first_failure {
        return Err(Error::Hypothesis(format!(
            "pairing identity g(n+2)f(n+2) - g(n)f(n) = beta fails first at n = {n}"
        )));
    }
    let inner = weighted_shift(&pair.g, 2, 2, dim);
    Ok(GeneralAngle { pair, report, inner, dim })
}

impl GeneralAngle {
    pub fn inner(&self) -> &BandedOperator {
        &self.inner
    }

    /// Eigenvalue of `[N, log(g_{N+2} L^2)]` on the domain families.
    pub fn expected_commutator(&self) -> Complex64 {
        Complex64::new(-2.0, 0.0)
    }

    pub fn check_alpha(&self, alpha: Complex64) -> Result<()> {
        if !self.pair.admissible(alpha, self.report.radius) {
            return Err(Error::Domain(format!(
                "alpha = {alpha} violates |1 - alpha beta| < 1 or |alpha| < M_f = {}",
                self.report.radius
            )));
        }
        Ok(())
    }

    /// `(f_N L*^2)^n xi_{alpha,f}`; eigenvalue `alpha beta` at `n = 0`.
    pub fn family(&self, n: usize, alpha: Complex64) -> Result<FockVector> {
        self.check_alpha(alpha)?;
        let base = generalized_eigen_vector(&self.pair.f, 2, alpha, self.dim)?;
        let x = self.raising();
        let mut v = base;
        for _ in 0..n {
            v = x.apply(&v)?;
        }
        Ok(v)
    }

    /// Odd sector: `h_N L* (f_N L*^2)^n xi_{alpha,f}`.
    pub fn odd_family(&self, h: &Weight, n: usize, alpha: Complex64) -> Result<FockVector> {
        let v = self.family(n, alpha)?;
        let hl = make(OperatorKind::Diagonal(h.clone(), 0), self.dim).compose(&make(OperatorKind::RightShift, self.dim))?;
        hl.apply(&v)
    }

    /// `f_N L*^2`
    pub fn raising(&self) -> BandedOperator {
        let growth = sample_growth(&self.pair.f, 0, self.dim);
        let f = self.pair.f.clone();
        BandedOperator::empty(self.dim).with_band(-2, Band::new(move |n| f.eval(n as i64), growth))
    }

    pub fn apply_log(&self, v: &FockVector, policy: &SeriesPolicy) -> Result<(FockVector, SeriesReport)> {
        series_apply(SeriesKind::Log, &self.inner, v, policy)
    }

    pub fn apply(&self, v: &FockVector, policy: &SeriesPolicy) -> Result<(FockVector, SeriesReport)> {
        let (w, r) = self.apply_log(v, policy)?;
        Ok((w.scale(Complex64::new(0.0, 0.5)), r))
    }

    /// `log(Y) X xi = log(alpha beta) X xi + xi / alpha` with `X = f_N L*^2`.
    pub fn first_member_closed_form(&self, alpha: Complex64) -> Result<FockVector> {
        let xi = self.family(0, alpha)?;
        let x_xi = self.family(1, alpha)?;
        x_xi.scale(principal_ln(alpha * self.pair.beta)).add(&xi.scale(1.0 / alpha))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub discrepancy: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub budget: f64,
}

/// Compares `log(g_{N+k} L^k) xi_{alpha,f}` with
/// `f!_k(N) log((N+k) L^k) e^{alpha L*^k} Omega` for `f g = id`.
pub fn reduction_identity_check(
    f: &Weight,
    g: &Weight,
    k: usize,
    alpha: Complex64,
    dim: usize,
) -> Result<ReductionReport> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    for n in 0..=dim {
        let p = f.eval(n as i64).to_c64() * g.eval(n as i64).to_c64();
        if (p - Complex64::new(n as f64, 0.0)).norm() > 1e-12 * (1.0 + n as f64) {
            return Err(Error::Precondition(format!("f(n) g(n) = {p} differs from n at n = {n}")));
        }
    }
    let ka = alpha * k as f64;
    if !(ka.norm() < 1.0 && (Complex64::new(1.0, 0.0) - ka).norm() < 1.0) {
        return Err(Error::Precondition(format!("need |k alpha| < 1 and |1 - k alpha| < 1, got k alpha = {ka}")));
    }
    let pol = SeriesPolicy::default();
    let lhs_op = weighted_shift(g, k as i64, k, dim);
    let xi = generalized_eigen_vector(f, k, alpha, dim)?;
    let (lhs, r1) = series_apply(SeriesKind::Log, &lhs_op, &xi, &pol)?;

    let nk = Weight::new_dd("n", |n| Cdd::from_f64(n as f64));
    let rhs_op = weighted_shift(&nk, k as i64, k, dim);
    let e = generalized_eigen_vector(&Weight::one(), k, alpha, dim)?;
    let (inner, r2) = series_apply(SeriesKind::Log, &rhs_op, &e, &pol)?;
    let rhs = make(OperatorKind::FactorialWeight(f.clone(), k), dim).apply(&inner)?;
    Ok(ReductionReport {
        discrepancy: lhs.distance(&rhs)?,
        lhs_norm: lhs.norm(),
        rhs_norm: rhs.norm(),
        budget: r1.truncation_budget + r2.truncation_budget,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteRoot {
    pub alpha: Complex64,
    pub inside_disc: bool,
    pub series_converges: bool,
}

impl FiniteRoot {
    pub fn admissible(&self) -> bool {
        self.inside_disc && self.series_converges
    }
}

/// Roots of `-(c + m) z^m + c omega = 0`; the geometric vectors at admissible
/// roots satisfy `[N, log(omega - L^m)] v = c v`.
pub fn finite_ccr_root_solver(omega: Complex64, m: usize, c: Complex64) -> Result<Vec<FiniteRoot>> {
    if m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    if !(omega.norm() > 0.0 && omega.norm() < 1.0) {
        return Err(Error::Parameter(format!("need 0 < |omega| < 1, got {}", omega.norm())));
    }
    if c.norm() == 0.0 {
        return Err(Error::Parameter("c must be nonzero".into()));
    }
    let cm = c + m as f64;
    if cm.norm() < 1e-14 {
        return Err(Error::Parameter(format!("c = -m = {c} makes the root equation degenerate")));
    }
    let target = c * omega / cm;
    let base = if target.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar(target.norm().powf(1.0 / m as f64), target.arg() / m as f64)
    };
    Ok((0..m)
        .map(|k| {
            let alpha = base * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
            let am = alpha.powu(m as u32);
            FiniteRoot {
                alpha,
                inside_disc: alpha.norm() < 1.0,
                series_converges: (Complex64::new(1.0, 0.0) - omega + am).norm() < 1.0,
            }
        })
        .collect())
}

/// Search for CCR eigenvectors of `(i/m) log(omega - L^m)` with `|omega| > 1`
/// among geometric vectors: returns the smallest `|lambda + i|` found, where
/// `(i/m)[N, log(omega - L^m)] v = lambda v`.
pub fn outside_disc_diagnostic(omega: Complex64, m: usize, dim: usize, radii: &[f64], angles: usize) -> Result<f64> {
    if omega.norm() <= 1.0 {
        return Err(Error::Parameter("diagnostic is for |omega| > 1".into()));
    }
    let r = 0.5 * (1.0 + omega.norm().powf(1.0 / m as f64));
    let t = crate::opfunc::dunford_log(omega, m as u32, &shift_power(m as i64, dim), r, 256)?;
    let n = make(OperatorKind::Number, dim);
    let scale = Complex64::new(0.0, 1.0 / m as f64);
    let mut best = f64::INFINITY;
    for &rad in radii {
        for j in 0..angles {
            let alpha = Complex64::from_polar(rad, 2.0 * PI * j as f64 / angles as f64);
            let v = geometric_vector(alpha, dim)?;
            let nt = n.apply(&t.apply(&v)?)?;
            let tn = t.apply(&n.apply(&v)?)?;
            let cv = nt.sub(&tn)?.scale(scale);
            let lambda = v.inner(&cv)? / v.norm_sqr();
            best = best.min((lambda + Complex64::new(0.0, 1.0)).norm());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{basis_vector, ccr_domain_sample, DomainConstraint};
    use crate::operators::commutator_apply;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn classification_matches_table() {
        let z = classify(c(0.0, 0.0), 2).unwrap();
        assert_eq!(z.classification, Family::Zero);
        assert_eq!(z.expected, Expected { bounded: false, ccr_domain: CcrDomain::InfiniteDim });
        let o = classify(c(0.5, 0.0), 1).unwrap();
        assert_eq!(o.classification, Family::OpenDisc);
        assert_eq!(o.expected, Expected { bounded: false, ccr_domain: CcrDomain::FiniteDim });
        let b = classify(c(1.0, 0.0), 1).unwrap();
        assert_eq!(b.classification, Family::Boundary);
        assert_eq!(b.expected, Expected { bounded: true, ccr_domain: CcrDomain::Dense });
        assert!(classify(c(1.2, 0.0), 1).is_err());
        assert!(conjugate_operator(c(0.0, 1.5), 1, 8).is_err());
    }

    #[test]
    fn galapon_small_and_forms() {
        let g = galapon_operator(2);
        assert_eq!(g.entry(0, 1), c(0.0, -1.0));
        assert_eq!(g.entry(1, 0), c(0.0, 1.0));
        assert_eq!(g.entry(0, 0), c(0.0, 0.0));
        for d in [2usize, 3, 7, 33, 64] {
            let a = galapon_operator(d);
            let b = galapon_series_form(d).unwrap();
            for n in 0..d {
                for m in 0..d {
                    assert_eq!(a.entry_dd(n, m), b.entry_dd(n, m));
                    if n != m {
                        assert_eq!(a.entry(n, m), c(0.0, 1.0 / (n as f64 - m as f64)));
                    }
                }
            }
            let adj = a.adjoint();
            assert_eq!(adj.dense(), a.dense());
            let t = t11_operator(d);
            let sum = t.add_scaled(Cdd::ONE, &t.adjoint()).unwrap();
            assert_eq!(sum.dense(), a.dense());
        }
    }

    #[test]
    fn boundary_reduces_to_galapon_and_is_hermitian() {
        let d = 24;
        let b = boundary_operator(c(1.0, 0.0), 1, d).unwrap();
        assert_eq!(b.dense(), galapon_operator(d).dense());
        let w = Complex64::from_polar(1.0, PI / 3.0);
        let b = boundary_operator(w, 2, d).unwrap();
        let adj = b.adjoint();
        for n in 0..d {
            for m in 0..d {
                assert!((adj.entry(n, m) - b.entry(n, m)).norm() < 1e-16);
            }
        }
        assert!((b.entry(3, 3).re + 2.0 * (PI / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_ccr_on_residue_samples() {
        let d = 96;
        for m in 1..=3usize {
            for w in [c(1.0, 0.0), c(0.0, 1.0), Complex64::from_polar(1.0, PI / 3.0)] {
                let b = boundary_operator(w, m, d).unwrap();
                let con = DomainConstraint::ResidueClassZero { omega: w, m };
                let phi = ccr_domain_sample(&con, 17, d).unwrap();
                let n = make(OperatorKind::Number, d);
                let r = commutator_apply(&n, &b, &phi).unwrap();
                let res = r.add(&phi.scale(c(0.0, 1.0))).unwrap().norm();
                assert!(res < 1e-13 * d as f64, "m={m} w={w} res={res}");
            }
        }
    }

    #[test]
    fn weighted_galapon_examples() {
        let d = 40;
        let one = weighted_galapon(&Weight::one(), d, false).unwrap();
        assert_eq!(one.operator.dense(), galapon_operator(d).dense());

        let phases: Vec<f64> = (0..4 * d + 8).map(|n| ((n * 7919) % 101) as f64 * 0.0622).collect();
        let g = Weight::new("phase", move |n| Complex64::from_polar(1.0, phases[(n.max(0) as usize) % phases.len()]));
        let v = gauge_diagonal(&g, d);
        let l = make(OperatorKind::LeftShift, d);
        let lhs = make(OperatorKind::Diagonal(g.clone(), 0), d).compose(&l).unwrap();
        let rhs = v.adjoint().compose(&l).unwrap().compose(&v).unwrap();
        for n in 0..d {
            for m in 0..d {
                assert!((lhs.entry(n, m) - rhs.entry(n, m)).norm() < 1e-14);
            }
        }
        let lg = weighted_galapon(&g, d, false).unwrap().operator;
        let conj = v.adjoint().compose(&galapon_operator(d)).unwrap().compose(&v).unwrap();
        for n in 0..d {
            for m in 0..d {
                assert!((lg.entry(n, m) - conj.entry(n, m)).norm() < 1e-13);
            }
        }

        let sub = Weight::new("((n+2)/(n+1))^(1/4)", |n| c(((n + 2) as f64 / (n + 1) as f64).powf(0.25), 0.0));
        let s = weighted_galapon(&sub, d, true).unwrap();
        assert!(s.warnings.is_empty(), "{:?}", s.warnings);
        let adj = s.operator.adjoint();
        for n in 0..d {
            for m in 0..d {
                assert!((adj.entry(n, m) - s.operator.entry(n, m)).norm() < 1e-14);
            }
        }
        let fast = Weight::new("n+1", |n| c((n + 1) as f64, 0.0));
        let s = weighted_galapon(&fast, d, true).unwrap();
        assert_eq!(s.warnings.len(), 1);
        let zero = Weight::new("0 at 3", |n| c(if n == 3 { 0.0 } else { 1.0 }, 0.0));
        assert!(weighted_galapon(&zero, d, false).is_err());
    }

    #[test]
    fn weighted_ccr_on_weighted_samples() {
        let d = 64;
        let g = Weight::new("((n+2)/(n+1))^(1/4)", |n| c(((n + 2) as f64 / (n + 1) as f64).powf(0.25), 0.0));
        let lg = weighted_galapon(&g, d, false).unwrap().operator;
        let phi = ccr_domain_sample(&DomainConstraint::WeightedSumZero(g), 4, d).unwrap();
        let n = make(OperatorKind::Number, d);
        let r = commutator_apply(&n, &lg, &phi).unwrap();
        assert!(r.add(&phi.scale(c(0.0, 1.0))).unwrap().norm() < 1e-12);
    }

    #[test]
    fn roots_including_double() {
        let spec = PolySpec::new(&[c(0.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(spec.degree, 2);
        for a in &spec.roots_of_one_minus_p {
            assert!((a - c(1.0, 0.0)).norm() < 1e-12, "{a}");
        }
        let w = Complex64::from_polar(1.0, 0.7);
        let spec = PolySpec::monomial(w, 3).unwrap();
        for a in &spec.roots_of_one_minus_p {
            assert!((a.powu(3) * w - 1.0).norm() < 1e-13);
        }
        let off = PolySpec::new(&[c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(matches!(poly_time_operator(off, 16), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn poly_forward_identities_and_ccr() {
        let d = 64;
        let spec = PolySpec::new(&[c(0.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let xp = poly_time_operator(spec, d).unwrap();
        let psi = ccr_domain_sample(&DomainConstraint::SupportBound(20), 3, d).unwrap();
        assert!(xp.forward_identity_residual(&psi).unwrap() < 1e-13);

        let lin = poly_time_operator(PolySpec::new(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap(), d).unwrap();
        let phi = lin.domain_vector(&psi).unwrap();
        let n = make(OperatorKind::Number, d);
        let r = commutator_apply(&n, &lin.dense(), &phi).unwrap();
        assert!(r.add(&phi).unwrap().norm() < 1e-12);
        // X_z is i^{-1} times Galapon's operator
        let g = galapon_operator(d);
        for i in 0..d {
            for j in 0..d {
                let want = g.entry(i, j) * c(0.0, -1.0);
                assert!((lin.dense().entry(i, j) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn poly_monomial_matches_boundary() {
        let d = 48;
        let w = Complex64::from_polar(1.0, 0.9);
        for m in 1..=3 {
            let xp = poly_time_operator(PolySpec::monomial(w, m).unwrap(), d).unwrap();
            let t = xp.time_operator();
            let b = boundary_operator(w.conj(), m, d).unwrap();
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        assert!((t.entry(i, j) - b.entry(i, j)).norm() < 1e-13, "m={m} ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn angle_eigen_relations() {
        let d = 256;
        for (variant, j) in [(AngleVariant::S0, 0), (AngleVariant::S1, 1)] {
            let s = angle_operator(variant, d).unwrap();
            let v = super_coherent_vector(c(0.5, 0.0), j, d).unwrap();
            let yv = s.inner().apply(&v).unwrap();
            assert!(yv.sub(&v.scale(c(0.5, 0.0))).unwrap().norm() < 1e-11);
        }
        assert!(angle_operator(AngleVariant::S0, 3).is_err());
    }

    #[test]
    fn pairing_examples() {
        let s0 = AnglePairing::s0();
        let rep = pairing_check(&s0, 64);
        assert!(rep.passed);
        assert!((rep.beta_at_zero - c(2.0, 0.0)).norm() < 1e-14);

        let beta = c(0.7, 0.2);
        let lin = AnglePairing {
            f: Weight::identity(),
            g: Weight::constant(beta / 2.0),
            beta,
            radius: None,
        };
        let rep = pairing_check(&lin, 64);
        assert!(rep.passed);
        assert!((rep.radius - 0.5).abs() < 1e-6, "{}", rep.radius);

        let sq = AnglePairing {
            f: Weight::new("n^2", |n| c((n * n) as f64, 0.0)),
            g: Weight::one(),
            beta: c(1.0, 0.0),
            radius: None,
        };
        let rep = pairing_check(&sq, 64);
        assert_eq!(rep.radius, 0.0);
        assert!(rep.admissible_region_empty);
        assert!(matches!(general_angle_builder(sq, 32), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn s0_pairing_reproduces_super_coherent() {
        let d = 128;
        let ga = general_angle_builder(AnglePairing::s0(), d).unwrap();
        let b = 0.5;
        let v = ga.family(0, c(b / 2.0, 0.0)).unwrap();
        let w = super_coherent_vector(c(b, 0.0), 0, d).unwrap();
        assert!(v.distance(&w).unwrap() < 1e-15);
    }

    #[test]
    fn constant_pairing_eigen_relation() {
        let d = 128;
        let beta = c(1.0, 0.0);
        let pair = AnglePairing {
            f: Weight::one(),
            g: Weight::new("n/2", move |n| beta * (n as f64 / 2.0)),
            beta,
            radius: None,
        };
        let ga = general_angle_builder(pair, d).unwrap();
        let alpha = c(0.7, 0.0);
        let v = ga.family(0, alpha).unwrap();
        let yv = ga.inner().apply(&v).unwrap();
        assert!(yv.sub(&v.scale(alpha * beta)).unwrap().norm() < 1e-11);
    }

    #[test]
    fn first_family_member_log() {
        let d = 512;
        let ga = general_angle_builder(AnglePairing::s0(), d).unwrap();
        let alpha = c(0.3, 0.0);
        let x_xi = ga.family(1, alpha).unwrap();
        let (got, rep) = ga.apply_log(&x_xi, &SeriesPolicy::default()).unwrap();
        let want = ga.first_member_closed_form(alpha).unwrap();
        let r = got.distance(&want).unwrap() / want.norm();
        assert!(r < 1e-9 + rep.truncation_budget, "r = {r}");
    }

    #[test]
    fn reduction_identity_examples() {
        let d = 128;
        let cases: Vec<(Weight, Weight, usize, f64)> = vec![
            (Weight::identity(), Weight::one(), 1, 0.4),
            (Weight::one(), Weight::identity(), 2, 0.2),
            (Weight::sqrt_n(), Weight::sqrt_n(), 1, 0.4),
        ];
        for (f, g, k, a) in cases {
            let rep = reduction_identity_check(&f, &g, k, c(a, 0.0), d).unwrap();
            assert!(rep.discrepancy <= 1e-9, "{rep:?}");
        }
        let bad = reduction_identity_check(&Weight::identity(), &Weight::identity(), 1, c(0.4, 0.0), d);
        assert!(matches!(bad, Err(Error::Precondition(_))));
    }

    #[test]
    fn finite_roots() {
        let r = finite_ccr_root_solver(c(0.8, 0.0), 1, c(0.2, 0.0)).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].alpha - c(2.0 / 15.0, 0.0)).norm() < 1e-15);
        assert!(r[0].admissible());

        let r = finite_ccr_root_solver(c(0.5, 0.0), 2, c(0.1, 0.0)).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].alpha + r[1].alpha).norm() < 1e-15);
        for root in &r {
            assert!(root.alpha.norm() < 1.0);
            assert!((root.alpha.powu(2) * 2.1 - 0.05).norm() < 1e-15);
        }
        assert!(matches!(finite_ccr_root_solver(c(0.5, 0.0), 1, c(-1.0, 0.0)), Err(Error::Parameter(_))));
    }

    #[test]
    fn zero_family_eigenvectors() {
        let d = 512;
        let t = conjugate_operator(c(0.0, 0.0), 2, d).unwrap();
        let v = generalized_eigen_vector(&Weight::identity(), 2, c(0.25, 0.0), d).unwrap();
        let (w, _) = t.apply_log(&v, &SeriesPolicy::default()).unwrap();
        assert!(w.sub(&v.scale(c(0.5f64.ln(), 0.0))).unwrap().norm() < 1e-12);
        assert!(t.dense_form().is_err());
    }

    #[test]
    fn unbounded_witness_runs_off() {
        let w = unboundedness_witness(&[0.5, 0.2, 0.05], 256).unwrap();
        for (b, q) in &w {
            assert!((q - b.ln()).abs() < 1e-9, "{b} {q}");
        }
    }

    #[test]
    fn outside_disc_has_no_ccr_eigenvectors() {
        let best = outside_disc_diagnostic(c(2.0, 0.0), 1, 48, &[0.2, 0.4, 0.6], 8).unwrap();
        assert!(best > 0.5, "{best}");
    }

    #[test]
    fn galapon_witness_outside_domain_fails() {
        let d = 16;
        let n = make(OperatorKind::Number, d);
        let g = galapon_operator(d);
        let e0 = basis_vector(0, d).unwrap();
        let r = commutator_apply(&n, &g, &e0).unwrap();
        assert!(r.add(&e0.scale(c(0.0, 1.0))).unwrap().norm() >= 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn boundary_norm_bound(m in 1usize..4, th in -3.1f64..3.1, e in 4u32..8) {
            let d = 1usize << e;
            let w = Complex64::from_polar(1.0, th);
            let b = boundary_operator(w, m, d).unwrap();
            let nrm = b.norm_estimate().unwrap();
            let bound = PI / m as f64 + 2.0 * th.abs() / m as f64;
            prop_assert!(nrm <= bound + 1e-6, "norm {} bound {}", nrm, bound);
        }

        #[test]
        fn forward_identities_on_random_psi(th in 0.0f64..6.28, m in 1usize..4, seed in any::<u64>()) {
            let d = 48;
            let w = Complex64::from_polar(1.0, th);
            let xp = poly_time_operator(PolySpec::monomial(w, m).unwrap(), d).unwrap();
            let psi = ccr_domain_sample(&DomainConstraint::SupportBound(23), seed, d).unwrap();
            prop_assert!(xp.forward_identity_residual(&psi).unwrap() < 1e-13);
        }
    }
}
