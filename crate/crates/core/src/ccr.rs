//! Commutator residuals `[N, T] phi - lambda phi`, the ultra-weak form of the
//! CCR and the Kennard inequality.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conjugates::{AngleOperator, ConjugateOperator, Family, GeneralAngle};
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::operators::{commutator_guard, make, BandedOperator, OperatorKind};
use crate::opfunc::{principal_log_apply, series_apply, SeriesKind, SeriesPolicy, SeriesStatus};

/// `T v` together with a bound on the error of the stored coefficients.
#[derive(Clone, Debug)]
pub struct Applied {
    pub vector: FockVector,
    pub budget: f64,
}

/// Anything that can be applied to a vector with an error budget.
pub trait VectorOperator: Send + Sync {
    fn apply_to(&self, v: &FockVector) -> Result<Applied>;

    /// The band form, when there is one (enables the truncation guard).
    fn as_banded(&self) -> Option<&BandedOperator> {
        None
    }
}

impl VectorOperator for BandedOperator {
    fn apply_to(&self, v: &FockVector) -> Result<Applied> {
        let budget = self.truncation_error(v);
        if !budget.is_finite() {
            return Err(Error::Guard(
                "vector has an uncertified tail and the operator reads beyond the truncation".into(),
            ));
        }
        Ok(Applied { vector: self.apply(v)?, budget })
    }

    fn as_banded(&self) -> Option<&BandedOperator> {
        Some(self)
    }
}

#[derive(Clone, Debug)]
enum LogInner {
    Series(BandedOperator),
    /// `Log(omega - A)` for `|omega| = 1`.
    Principal(Complex64, BandedOperator),
}

/// `scale * log(inner)` applied by series.
#[derive(Clone, Debug)]
pub struct LogOperator {
    inner: LogInner,
    pub scale: Complex64,
    pub policy: SeriesPolicy,
}

impl LogOperator {
    pub fn series(inner: BandedOperator, scale: Complex64) -> Self {
        LogOperator { inner: LogInner::Series(inner), scale, policy: SeriesPolicy::default() }
    }

    pub fn principal(omega: Complex64, a: BandedOperator, scale: Complex64) -> Self {
        LogOperator { inner: LogInner::Principal(omega, a), scale, policy: SeriesPolicy::default() }
    }

    pub fn with_policy(mut self, policy: SeriesPolicy) -> Self {
        self.policy = policy;
        self
    }
}

impl VectorOperator for LogOperator {
    fn apply_to(&self, v: &FockVector) -> Result<Applied> {
        let (w, rep) = match &self.inner {
            LogInner::Series(a) => series_apply(SeriesKind::Log, a, v, &self.policy)?,
            LogInner::Principal(omega, a) => principal_log_apply(*omega, a, v, &self.policy)?,
        };
        if rep.status != SeriesStatus::Converged {
            return Err(Error::Divergent(format!(
                "log series {:?} after {} terms (last increment {:.3e})",
                rep.status, rep.terms_used, rep.last_increment
            )));
        }
        Ok(Applied { vector: w.scale(self.scale), budget: rep.truncation_budget * self.scale.norm() })
    }
}

impl ConjugateOperator {
    /// `T_{omega,m}` as a vector operator.
    pub fn time_operator(&self) -> LogOperator {
        let s = Complex64::new(0.0, 1.0 / self.family.m as f64);
        match self.family.classification {
            Family::Boundary => LogOperator::principal(
                self.family.omega,
                crate::operators::shift_power(self.family.m as i64, self.dim()),
                s,
            ),
            _ => LogOperator::series(self.inner().clone(), s),
        }
    }

    /// `-(i/c) log(omega - L^m)`, the scaling with `[N, .] = -i` on the
    /// geometric vectors at the roots for `c`.
    pub fn scaled_by_c(&self, c: Complex64) -> LogOperator {
        LogOperator::series(self.inner().clone(), Complex64::new(0.0, -1.0) / c)
    }
}

impl AngleOperator {
    /// `(i/2) log(g_{N+2} L^2)`
    pub fn time_operator(&self) -> LogOperator {
        LogOperator::series(self.inner().clone(), Complex64::new(0.0, 0.5))
    }
}

impl GeneralAngle {
    pub fn time_operator(&self) -> LogOperator {
        LogOperator::series(self.inner().clone(), Complex64::new(0.0, 0.5))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "Pass",
            Verdict::Fail => "Fail",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcrReport {
    pub residual_norm: f64,
    pub expected_eigenvalue: Complex64,
    pub domain_tag: String,
    pub vector_id: String,
    pub truncation_budget: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CcrReport {
    fn inconclusive(expected: Complex64, tol: f64, tag: &str, id: &str, why: String) -> Self {
        CcrReport {
            residual_norm: f64::NAN,
            expected_eigenvalue: expected,
            domain_tag: tag.into(),
            vector_id: id.into(),
            truncation_budget: f64::INFINITY,
            tolerance: tol,
            verdict: Verdict::Inconclusive,
            note: Some(why),
        }
    }
}

fn residual(t: &dyn VectorOperator, phi: &FockVector, expected: Complex64) -> Result<(f64, f64)> {
    let n = make(OperatorKind::Number, phi.dim());
    let t_phi = t.apply_to(phi)?;
    let n_phi = n.apply(phi)?;
    let t_n_phi = t.apply_to(&n_phi)?;
    let r = n.apply(&t_phi.vector)?.sub(&t_n_phi.vector)?.sub(&phi.scale(expected))?;
    // N multiplies errors on the first D coefficients by at most D - 1
    let d = phi.dim().saturating_sub(1) as f64;
    Ok((r.norm(), d * t_phi.budget + t_n_phi.budget))
}

/// `||N T phi - T N phi - expected phi||`, with a guard failure or a
/// non-converging series reported as `Inconclusive`.
pub fn ccr_check(t: &dyn VectorOperator, phi: &FockVector, expected: Complex64, tol: f64) -> CcrReport {
    ccr_check_tagged(t, phi, expected, tol, "", "")
}

pub fn ccr_check_tagged(
    t: &dyn VectorOperator,
    phi: &FockVector,
    expected: Complex64,
    tol: f64,
    domain_tag: &str,
    vector_id: &str,
) -> CcrReport {
    match residual(t, phi, expected) {
        Ok((res, budget)) => {
            let verdict = if !budget.is_finite() || !res.is_finite() {
                Verdict::Inconclusive
            } else if res <= tol + budget {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            CcrReport {
                residual_norm: res,
                expected_eigenvalue: expected,
                domain_tag: domain_tag.into(),
                vector_id: vector_id.into(),
                truncation_budget: budget,
                tolerance: tol,
                verdict,
                note: (verdict == Verdict::Inconclusive).then(|| "error budget is not finite".into()),
            }
        }
        Err(e) => CcrReport::inconclusive(expected, tol, domain_tag, vector_id, e.to_string()),
    }
}

/// A vector of the direct sum: an even-parity and an odd-parity component.
#[derive(Clone, Debug)]
pub struct SectorPair {
    pub even: FockVector,
    pub odd: FockVector,
}

impl SectorPair {
    pub fn new(even: FockVector, odd: FockVector) -> Result<Self> {
        if even.dim() != odd.dim() {
            return Err(Error::DimensionMismatch { left: even.dim(), right: odd.dim() });
        }
        for (v, want_even, name) in [(&even, true, "even"), (&odd, false, "odd")] {
            let stray = v.parity_part(!want_even).norm();
            if stray > 0.0 {
                return Err(Error::Domain(format!("{name} sector component has norm {stray:.3e} in the other sector")));
            }
        }
        Ok(SectorPair { even, odd })
    }

    pub fn even_only(even: FockVector) -> Result<Self> {
        let odd = FockVector::zeros(even.dim())?;
        SectorPair::new(even, odd)
    }

    pub fn odd_only(odd: FockVector) -> Result<Self> {
        let even = FockVector::zeros(odd.dim())?;
        SectorPair::new(even, odd)
    }

    fn map(&self, f: impl Fn(&FockVector) -> Result<FockVector>) -> Result<SectorPair> {
        Ok(SectorPair { even: f(&self.even)?, odd: f(&self.odd)? })
    }

    /// `(phi, psi)` of the direct sum.
    pub fn inner(&self, other: &SectorPair) -> Result<Complex64> {
        Ok(self.even.inner(&other.even)? + self.odd.inner(&other.odd)?)
    }
}

/// `T[phi, psi] = T_0[phi_0, psi_0] + T_1[phi_1, psi_1]` with
/// `T_j[phi, psi] = ((S_j phi, psi) + (phi, S_j psi))/2`.
pub struct UltraWeakForm {
    pub even: Box<dyn VectorOperator>,
    pub odd: Box<dyn VectorOperator>,
}

impl UltraWeakForm {
    pub fn new(even: impl VectorOperator + 'static, odd: impl VectorOperator + 'static) -> Self {
        UltraWeakForm { even: Box::new(even), odd: Box::new(odd) }
    }

    fn sector(s: &dyn VectorOperator, phi: &FockVector, psi: &FockVector) -> Result<(Complex64, f64)> {
        let sphi = s.apply_to(phi)?;
        let spsi = s.apply_to(psi)?;
        let v = 0.5 * (sphi.vector.inner(psi)? + phi.inner(&spsi.vector)?);
        let budget = 0.5 * (sphi.budget * psi.norm() + spsi.budget * phi.norm());
        Ok((v, budget))
    }

    /// Value and error budget of `T[phi, psi]`.
    pub fn evaluate(&self, phi: &SectorPair, psi: &SectorPair) -> Result<(Complex64, f64)> {
        let (a, ea) = Self::sector(self.even.as_ref(), &phi.even, &psi.even)?;
        let (b, eb) = Self::sector(self.odd.as_ref(), &phi.odd, &psi.odd)?;
        Ok((a + b, ea + eb))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UltraWeakReport {
    /// `|T[N phi, psi] - conj(T[N psi, phi]) + i (phi, psi)|`
    pub defect: f64,
    /// `|T[phi, psi] - conj(T[psi, phi])|`
    pub symmetry_defect: f64,
    pub budget: f64,
    pub verdict: Verdict,
}

pub fn ultraweak_ccr_check(form: &UltraWeakForm, phi: &SectorPair, psi: &SectorPair, tol: f64) -> Result<UltraWeakReport> {
    let n = make(OperatorKind::Number, phi.even.dim());
    let nphi = phi.map(|v| n.apply(v))?;
    let npsi = psi.map(|v| n.apply(v))?;
    let (a, ea) = form.evaluate(&nphi, psi)?;
    let (b, eb) = form.evaluate(&npsi, phi)?;
    let ip = phi.inner(psi)?;
    let defect = (a - b.conj() + Complex64::new(0.0, 1.0) * ip).norm();
    let (s1, e1) = form.evaluate(phi, psi)?;
    let (s2, e2) = form.evaluate(psi, phi)?;
    let symmetry_defect = (s1 - s2.conj()).norm();
    let budget = ea + eb + e1 + e2;
    let verdict = if !budget.is_finite() {
        Verdict::Inconclusive
    } else if defect <= tol + budget && symmetry_defect <= 1e-12 + budget {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(UltraWeakReport { defect, symmetry_defect, budget, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KennardReport {
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub commutator_expectation: Complex64,
    pub slack: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// `sigma_A sigma_B - |<[A, B]>|/2` for a unit vector.
pub fn kennard_check(a: &BandedOperator, b: &dyn VectorOperator, psi: &FockVector) -> Result<KennardReport> {
    let mut warning = None;
    let nrm = psi.norm();
    let psi = if (nrm - 1.0).abs() > 1e-12 {
        warning = Some(format!("input norm {nrm} was normalized"));
        psi.normalized()?
    } else {
        psi.clone()
    };
    if let Some(bb) = b.as_banded() {
        commutator_guard(a, bb, &psi)?;
    }
    let ap = a.apply(&psi)?;
    let bp = b.apply_to(&psi)?.vector;
    let mean_a = psi.inner(&ap)?;
    let mean_b = psi.inner(&bp)?;
    let sigma_a = ap.sub(&psi.scale(mean_a))?.norm();
    let sigma_b = bp.sub(&psi.scale(mean_b))?.norm();
    let abp = a.apply(&bp)?;
    let bap = b.apply_to(&ap)?.vector;
    let commutator_expectation = psi.inner(&abp.sub(&bap)?)?;
    let slack = sigma_a * sigma_b - 0.5 * commutator_expectation.norm();
    Ok(KennardReport {
        sigma_a,
        sigma_b,
        commutator_expectation,
        slack,
        verdict: if slack >= -1e-10 { Verdict::Pass } else { Verdict::Fail },
        warning,
    })
}
