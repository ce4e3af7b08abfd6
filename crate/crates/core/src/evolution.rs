//! Heisenberg evolution `T(t) = e^{itN} T e^{-itN}`, its period `2 pi/m` and
//! the failure of the weak Weyl relation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ccr::{LogOperator, VectorOperator};
use crate::conjugates::{angle_operator, classify, AngleVariant, ConjugateFamily, Family};
use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::operators::{shift_power, Band, BandedOperator, Growth};
use crate::opfunc::principal_ln;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub t: f64,
    pub omega: Complex64,
    pub m: usize,
}

/// `e^{is}` rounded to double-double and renormalized, so that `z^n` and
/// `conj(z)^n` are exact mutual inverses to working precision.
pub fn unit_phase(s: f64) -> Cdd {
    let z = Cdd::from(Complex64::from_polar(1.0, s));
    z.scale(z.norm_sqr().sqrt().recip())
}

/// `e^{i s N}` as a diagonal phase with entries `z^n`, `z = e^{is}`.
///
/// Powers of one double-double phase keep rotated eigenvectors of `L^m`
/// exact eigenvectors, which the log series needs.
pub fn phase_diagonal(s: f64, dim: usize) -> BandedOperator {
    let z = unit_phase(s);
    BandedOperator::empty(dim).with_band(0, Band::new(move |n| z.powu(n as u32), Some(Growth::bounded(1.0))))
}

/// `e^{itN} A e^{-itN}` computed as a product of compressions.
pub fn conjugate_by_number(a: &BandedOperator, t: f64) -> Result<BandedOperator> {
    let dim = a.dim();
    phase_diagonal(t, dim).compose(a)?.compose(&phase_diagonal(-t, dim))
}

/// Boundary operator with `L^m` replaced by `phase * L^m`; the diagonal
/// `(i/m)(Log omega - Log conj(omega))` is untouched.
fn boundary_with_phase(omega: Complex64, m: usize, phase: Cdd, dim: usize) -> BandedOperator {
    let im = Cdd::new(Dd::ZERO, Dd::ONE / Dd::new(m as f64));
    let diag = Complex64::new(0.0, 1.0 / m as f64) * (principal_ln(omega) - principal_ln(omega.conj()));
    let mut op = BandedOperator::empty(dim);
    if diag != Complex64::new(0.0, 0.0) {
        op = op.with_band(0, Band::constant(Cdd::from(diag)));
    }
    // Log(omega - p L^m) = Log omega - sum (1/k) (p conj(omega) L^m)^k
    let up = phase * Cdd::from(omega.conj());
    let mut pk = Cdd::ONE;
    let mut k = 1usize;
    while m * k < dim {
        pk = pk * up;
        let kk = Cdd::from_f64(k as f64);
        op = op.with_band((m * k) as i64, Band::constant(-(im * pk) / kk));
        op = op.with_band(-((m * k) as i64), Band::constant(im * pk.conj() / kk));
        k += 1;
    }
    op
}

/// Both constructions of `T_{omega,m}(t)`.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub params: EvolutionParams,
    pub family: ConjugateFamily,
    dim: usize,
}

pub fn evolve(params: EvolutionParams, dim: usize) -> Result<Evolution> {
    let family = classify(params.omega, params.m)?;
    if !params.t.is_finite() {
        return Err(Error::Parameter("t must be finite".into()));
    }
    Ok(Evolution { params, family, dim })
}

impl Evolution {
    fn m(&self) -> usize {
        self.params.m
    }

    /// `e^{-itm}`
    fn shift_phase(&self) -> Cdd {
        unit_phase(self.params.t).conj().powu(self.m() as u32)
    }

    fn require_boundary(&self) -> Result<()> {
        if self.family.classification != Family::Boundary {
            return Err(Error::Domain("dense forms exist only for the boundary family".into()));
        }
        Ok(())
    }

    /// `T` at time zero.
    pub fn initial_dense(&self) -> Result<BandedOperator> {
        self.require_boundary()?;
        Ok(boundary_with_phase(self.params.omega, self.m(), Cdd::ONE, self.dim))
    }

    /// `U_t T U_t*` with `U_t = diag(e^{itn})`.
    pub fn conjugated_dense(&self) -> Result<BandedOperator> {
        conjugate_by_number(&self.initial_dense()?, self.params.t)
    }

    /// `(i/m)(Log(omega - e^{-itm} L^m) - Log(conj(omega) - e^{itm} L*^m))`.
    pub fn direct_dense(&self) -> Result<BandedOperator> {
        self.require_boundary()?;
        Ok(boundary_with_phase(self.params.omega, self.m(), self.shift_phase(), self.dim))
    }

    /// Largest entrywise difference of the two constructions.
    pub fn compare_dense(&self) -> Result<f64> {
        Ok(max_entry_deviation(&self.conjugated_dense()?, &self.direct_dense()?))
    }

    fn time_operator_at(&self, phase: Cdd) -> Result<LogOperator> {
        let scale = Complex64::new(0.0, 1.0 / self.m() as f64);
        let lm = shift_power(self.m() as i64, self.dim).scaled(phase);
        Ok(match self.family.classification {
            Family::Boundary => LogOperator::principal(self.params.omega, lm, scale),
            Family::Zero => LogOperator::series(lm, scale),
            Family::OpenDisc => {
                let id = crate::operators::make(crate::operators::OperatorKind::Identity, self.dim);
                LogOperator::series(id.scaled(Cdd::from(self.params.omega)).add_scaled(-Cdd::ONE, &lm)?, scale)
            }
        })
    }

    /// `T(t) v` with `L^m` replaced by `e^{-itm} L^m`.
    pub fn apply_direct(&self, v: &FockVector) -> Result<FockVector> {
        Ok(self.time_operator_at(self.shift_phase())?.apply_to(v)?.vector)
    }

    /// `U_t T U_t* v`
    pub fn apply_conjugated(&self, v: &FockVector) -> Result<FockVector> {
        let t0 = self.time_operator_at(Cdd::ONE)?;
        let t = self.params.t;
        let w = phase_diagonal(-t, self.dim).apply(v)?;
        let w = t0.apply_to(&w)?.vector;
        phase_diagonal(t, self.dim).apply(&w)
    }
}

pub fn max_entry_deviation(a: &BandedOperator, b: &BandedOperator) -> f64 {
    let (x, y) = (a.dense(), b.dense());
    x.iter().zip(y.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub params: EvolutionParams,
    pub period: f64,
    pub deviation: f64,
    pub passed: bool,
}

/// Deviation between `T(t)` and `T(t + 2 pi/m)`: entrywise for the boundary
/// family, on `probe` for the unbounded families.
pub fn periodicity_check(params: EvolutionParams, dim: usize, probe: Option<&FockVector>) -> Result<PeriodicityReport> {
    let period = 2.0 * PI / params.m as f64;
    let now = evolve(params, dim)?;
    let later = evolve(EvolutionParams { t: params.t + period, ..params }, dim)?;
    let deviation = if now.family.classification == Family::Boundary {
        max_entry_deviation(&now.direct_dense()?, &later.direct_dense()?)
    } else {
        let v = probe.ok_or_else(|| Error::Domain("unbounded families are compared on a probe vector".into()))?;
        now.apply_conjugated(v)?.distance(&later.apply_conjugated(v)?)?
    };
    Ok(PeriodicityReport { params, period, deviation, passed: deviation <= 1e-12 })
}

/// `(i/2) log(e^{-2it} g_{N+2} L^2)` on `v`, the evolved angle operator.
pub fn angle_evolution_apply(variant: AngleVariant, t: f64, v: &FockVector) -> Result<FockVector> {
    let s = angle_operator(variant, v.dim())?;
    let inner = s.inner().scaled(unit_phase(t).conj().powu(2));
    Ok(LogOperator::series(inner, Complex64::new(0.0, 0.5)).apply_to(v)?.vector)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakWeylReport {
    pub params: EvolutionParams,
    /// `max |diag T(t) - diag T|`
    pub diagonal_shift: f64,
    /// What the weak Weyl relation would demand of the diagonal.
    pub required_shift: f64,
    /// `|t|`, the distance between the two.
    pub gap: f64,
    pub degenerate: bool,
}

/// Conjugation by a diagonal unitary fixes the diagonal of `T`, while
/// `A e^{-itH} = e^{-itH}(A + t)` would shift it by `t`.
pub fn weak_weyl_failure_probe(params: EvolutionParams, dim: usize) -> Result<WeakWeylReport> {
    if (params.omega.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter("the probe needs |omega| = 1".into()));
    }
    let ev = evolve(params, dim)?;
    let a = ev.initial_dense()?;
    let b = ev.conjugated_dense()?;
    let diagonal_shift = (0..dim).map(|n| (a.entry(n, n) - b.entry(n, n)).norm()).fold(0.0, f64::max);
    Ok(WeakWeylReport {
        params,
        diagonal_shift,
        required_shift: params.t.abs(),
        gap: (params.t.abs() - diagonal_shift).abs(),
        degenerate: params.t == 0.0,
    })
}

/// A deterministic grid of boundary parameters: `m` in `1..=3`, `omega` on
/// the unit circle, `t` spread over a few periods.
pub fn boundary_grid(points: usize) -> Vec<EvolutionParams> {
    (0..points)
        .map(|j| {
            let m = 1 + j % 3;
            let theta = 2.0 * PI * ((j * 7) % 12) as f64 / 12.0;
            let t = -3.0 + 6.0 * ((j * 37) % 101) as f64 / 100.0;
            EvolutionParams { t, omega: Complex64::from_polar(1.0, theta), m }
        })
        .collect()
}
