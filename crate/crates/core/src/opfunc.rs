//! Functional calculus: power series for log, exp and arctan, the principal
//! Log for `|omega| = 1`, contour logarithms for `|omega| > 1`, and the
//! divergence probe.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::operators::BandedOperator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolicy {
    /// Increment-norm threshold, relative to the input norm.
    pub tol: f64,
    /// Consecutive sub-threshold increments needed to stop.
    pub streak: usize,
    pub k_max: usize,
    /// Abort when the partial sum exceeds this multiple of the input norm.
    pub divergence_factor: f64,
    /// Record the partial-sum norm after every term.
    pub trace: bool,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy { tol: 1e-14, streak: 3, k_max: 100_000, divergence_factor: 1e6, trace: false }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.streak == 0 || self.k_max < self.streak || !(self.divergence_factor > 1.0) {
            return Err(Error::Parameter(format!("invalid series policy {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesStatus {
    Converged,
    Diverged,
    Capped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub terms_used: usize,
    pub last_increment: f64,
    pub status: SeriesStatus,
    /// Bound on the error caused by coefficients beyond the truncation.
    pub truncation_budget: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partial_norm_trace: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    Log,
    Exp,
    Arctan,
}

/// Upper bound on the norm of the compression `P_D A P_D` from the band
/// growth data. The error of the first `D` coefficients of an iterate only
/// passes through the compression, so this is what the error recursion needs.
fn bounded_norm(a: &BandedOperator) -> Option<f64> {
    let mut s = 0.0;
    for d in a.offsets() {
        let g = a.band(d)?.growth()?;
        s += g.k * (a.dim() as f64).powf(g.p);
    }
    Some(s)
}

/// Running state: partial sum, stopping logic and error bookkeeping.
struct Accumulator<'a> {
    policy: &'a SeriesPolicy,
    input_norm: f64,
    sum: FockVector,
    below: usize,
    last_increment: f64,
    trace: Option<Vec<f64>>,
    budget: f64,
}

enum Step {
    Continue,
    Done(SeriesStatus),
}

impl<'a> Accumulator<'a> {
    fn new(policy: &'a SeriesPolicy, v: &FockVector, start: FockVector) -> Self {
        Accumulator {
            policy,
            input_norm: v.norm(),
            sum: start,
            below: 0,
            last_increment: 0.0,
            trace: policy.trace.then(Vec::new),
            budget: 0.0,
        }
    }

    fn add(&mut self, coef: Cdd, term: &FockVector, term_err: f64) -> Result<Step> {
        self.sum = self.sum.axpy(coef, term)?;
        let inc = term.norm() * coef.abs();
        self.last_increment = inc;
        self.budget += coef.abs() * term_err;
        let sn = self.sum.norm();
        if let Some(t) = self.trace.as_mut() {
            t.push(sn);
        }
        if !sn.is_finite() || sn > self.policy.divergence_factor * self.input_norm.max(f64::MIN_POSITIVE) {
            return Ok(Step::Done(SeriesStatus::Diverged));
        }
        if inc <= self.policy.tol * self.input_norm {
            self.below += 1;
            if self.below >= self.policy.streak || term.norm() == 0.0 {
                return Ok(Step::Done(SeriesStatus::Converged));
            }
        } else {
            self.below = 0;
        }
        Ok(Step::Continue)
    }

    fn finish(self, terms: usize, status: SeriesStatus) -> (FockVector, SeriesReport) {
        let report = SeriesReport {
            terms_used: terms,
            last_increment: self.last_increment,
            status,
            truncation_budget: self.budget,
            partial_norm_trace: self.trace,
        };
        (self.sum, report)
    }
}

/// Tracks the error of a running iterate `x_{k+1} = M x_k` against the
/// untruncated iterate, where `M` has norm at most `m_norm`.
struct ErrorTrack {
    m_norm: Option<f64>,
    err: f64,
}

impl ErrorTrack {
    fn step(&mut self, op: &BandedOperator, scale: f64, x: &FockVector) {
        let lost = op.truncation_error(x) * scale;
        self.err = match self.m_norm {
            Some(m) => m * self.err + lost,
            None => {
                if self.err == 0.0 && lost == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        };
        if self.err.is_nan() {
            self.err = f64::INFINITY;
        }
    }
}

/// Power series of `log`, `exp` or `arctan` applied to `v`:
///
/// * `log A v = -sum_{k>=1} (1/k) (1 - A)^k v`
/// * `exp A v = sum_{k>=0} A^k v / k!`
/// * `arctan A v = -sum_{k>=0} (-1)^k A^{2k+1} v / (2k+1)`
pub fn series_apply(
    kind: SeriesKind,
    a: &BandedOperator,
    v: &FockVector,
    policy: &SeriesPolicy,
) -> Result<(FockVector, SeriesReport)> {
    policy.validate()?;
    if a.dim() != v.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: v.dim() });
    }
    let zero = FockVector::zeros(v.dim())?;
    let a_norm = bounded_norm(a);
    match kind {
        SeriesKind::Log => {
            let mut acc = Accumulator::new(policy, v, zero);
            let mut track = ErrorTrack { m_norm: a_norm.map(|n| 1.0 + n), err: 0.0 };
            let mut r = v.clone();
            for k in 1..=policy.k_max {
                let ar = a.apply(&r)?;
                track.step(a, 1.0, &r);
                r = r.sub(&ar)?;
                let coef = -Cdd::ONE / Cdd::from_f64(k as f64);
                if let Step::Done(s) = acc.add(coef, &r, track.err)? {
                    return Ok(acc.finish(k, s));
                }
            }
            Ok(acc.finish(policy.k_max, SeriesStatus::Capped))
        }
        SeriesKind::Exp => {
            let mut acc = Accumulator::new(policy, v, v.clone());
            let mut track = ErrorTrack { m_norm: a_norm, err: 0.0 };
            let mut t = v.clone();
            for k in 1..=policy.k_max {
                let at = a.apply(&t)?;
                track.step(a, 1.0, &t);
                let inv = Dd::ONE / Dd::new(k as f64);
                t = at.scale_dd(Cdd::real(inv));
                track.err *= inv.to_f64();
                if let Step::Done(s) = acc.add(Cdd::ONE, &t, track.err)? {
                    return Ok(acc.finish(k + 1, s));
                }
            }
            Ok(acc.finish(policy.k_max, SeriesStatus::Capped))
        }
        SeriesKind::Arctan => {
            let mut acc = Accumulator::new(policy, v, zero);
            let mut track = ErrorTrack { m_norm: a_norm, err: 0.0 };
            let mut p = a.apply(v)?;
            track.step(a, 1.0, v);
            for k in 0..policy.k_max {
                if k > 0 {
                    let ap = a.apply(&p)?;
                    track.step(a, 1.0, &p);
                    let aap = a.apply(&ap)?;
                    track.step(a, 1.0, &ap);
                    p = aap;
                }
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                let coef = Cdd::from_f64(sign) / Cdd::from_f64((2 * k + 1) as f64);
                if let Step::Done(s) = acc.add(coef, &p, track.err)? {
                    return Ok(acc.finish(k + 1, s));
                }
            }
            Ok(acc.finish(policy.k_max, SeriesStatus::Capped))
        }
    }
}

/// Principal branch `log z`, `arg` in `(-pi, pi]`.
pub fn principal_ln(z: Complex64) -> Complex64 {
    let mut arg = z.arg();
    if arg == -std::f64::consts::PI {
        arg = std::f64::consts::PI;
    }
    Complex64::new(z.norm().ln(), arg)
}

/// `Log(omega - A) v = log(omega) v - sum_{k>=1} (1/k) (A/omega)^k v` for
/// `|omega| = 1`.
pub fn principal_log_apply(
    omega: Complex64,
    a: &BandedOperator,
    v: &FockVector,
    policy: &SeriesPolicy,
) -> Result<(FockVector, SeriesReport)> {
    policy.validate()?;
    if (omega.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "principal Log needs |omega| = 1, got {}; use series_apply or dunford_log",
            omega.norm()
        )));
    }
    if a.dim() != v.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: v.dim() });
    }
    let ln_w = Cdd::from(principal_ln(omega));
    let inv_w = Cdd::from(omega).recip();
    let mut acc = Accumulator::new(policy, v, v.scale_dd(ln_w));
    let mut track = ErrorTrack { m_norm: bounded_norm(a), err: 0.0 };
    let mut r = v.clone();
    for k in 1..=policy.k_max {
        let ar = a.apply(&r)?;
        track.step(a, 1.0, &r);
        r = ar.scale_dd(inv_w);
        let coef = -Cdd::ONE / Cdd::from_f64(k as f64);
        if let Step::Done(s) = acc.add(coef, &r, track.err)? {
            return Ok(acc.finish(k, s));
        }
    }
    Ok(acc.finish(policy.k_max, SeriesStatus::Capped))
}

/// `(1/2 pi i) \oint_{|z|=r} log(omega - z^m) (z - A)^{-1} dz` by the
/// trapezoidal rule on `q` points, for `|omega| > 1`.
pub fn dunford_log(omega: Complex64, m: u32, a: &BandedOperator, r: f64, q: usize) -> Result<BandedOperator> {
    if m == 0 || q < 4 {
        return Err(Error::Parameter(format!("need m >= 1 and at least 4 nodes, got m = {m}, q = {q}")));
    }
    let limit = omega.norm().powf(1.0 / m as f64);
    if omega.norm() <= 1.0 {
        return Err(Error::Contour(format!(
            "|omega| = {} <= 1 leaves no admissible radius; use the series or principal Log",
            omega.norm()
        )));
    }
    if !(r > 1.0 && r < limit) {
        return Err(Error::Contour(format!("radius {r} outside (1, |omega|^(1/m) = {limit})")));
    }
    let a_norm = a.norm_estimate()?;
    let margin = 1e-3;
    if r - a_norm < margin {
        return Err(Error::Contour(format!("contour radius {r} within {margin} of the operator norm {a_norm}")));
    }
    let d = a.dim();
    let dense = a.dense();
    let upper = a.offsets().all(|o| o >= 0);
    let ln_w = principal_ln(omega);
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..q {
        let theta = std::f64::consts::TAU * j as f64 / q as f64;
        let z = Complex64::from_polar(r, theta);
        let fz = omega - z.powu(m);
        if fz.norm() < 1e-12 {
            return Err(Error::Branch(format!("omega - z^m vanishes on the contour at z = {z}")));
        }
        // log f = log omega + log(1 - z^m/omega), analytic on the closed disc
        let lf = ln_w + principal_ln(Complex64::new(1.0, 0.0) - z.powu(m) / omega);
        let mut shifted = -dense.clone();
        for i in 0..d {
            shifted[(i, i)] += z;
        }
        let ident = DMatrix::<Complex64>::identity(d, d);
        let res = if upper {
            shifted.solve_upper_triangular(&ident)
        } else {
            shifted.lu().solve(&ident)
        }
        .ok_or_else(|| Error::Contour(format!("resolvent singular at z = {z}")))?;
        acc += res * (lf * z / q as f64);
    }
    BandedOperator::from_dense(acc)
}

/// `s_K = (xi_probe, sum_{k<=K} (1/k) (1 - A)^k v)` for `K = 1..=k_max`.
pub fn divergence_probe(a: &BandedOperator, v: &FockVector, probe: usize, k_max: usize) -> Result<Vec<Complex64>> {
    if probe >= v.dim() {
        return Err(Error::IndexOutOfTruncation { index: probe, dim: v.dim() });
    }
    if a.dim() != v.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: v.dim() });
    }
    let mut out = Vec::with_capacity(k_max);
    let mut r = v.clone();
    let mut s = Cdd::ZERO;
    for k in 1..=k_max {
        let ar = a.apply(&r)?;
        r = r.sub(&ar)?;
        s += r.coeffs()[probe] / Cdd::from_f64(k as f64);
        out.push(s.to_c64());
    }
    Ok(out)
}

/// `H_K = sum_{k<=K} 1/k`
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}
