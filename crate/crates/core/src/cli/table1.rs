//! The three-family classification report, with numerical witnesses.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::suites::{Row, Table};
use crate::ccr::{ccr_check, Verdict};
use crate::conjugates::{
    boundary_operator, classify, conjugate_operator, finite_ccr_root_solver, galapon_operator, CcrDomain, Family,
};
use crate::error::Result;
use crate::fock::{ccr_domain_sample, generalized_eigen_vector, geometric_vector, DomainConstraint};
use crate::operators::fmt_f64;
use crate::opfunc::SeriesPolicy;
use crate::weight::Weight;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    pub params: String,
    pub value: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub family: Family,
    pub label: String,
    pub bounded: bool,
    pub ccr_domain: CcrDomain,
    pub example: String,
}

/// One classified `(omega, m)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Entry {
    pub omega: [f64; 2],
    pub m: usize,
    pub family: Family,
    pub bounded: bool,
    pub ccr_domain: CcrDomain,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub dim: usize,
    pub series_dim: usize,
    pub families: Vec<FamilyRow>,
    pub entries: Vec<Table1Entry>,
}

fn family_label(f: Family) -> &'static str {
    match f {
        Family::Zero => "omega = 0",
        Family::OpenDisc => "0 < |omega| < 1",
        Family::Boundary => "|omega| = 1",
    }
}

fn family_example(f: Family) -> &'static str {
    match f {
        Family::Zero => "(i/m) log L^m",
        Family::OpenDisc => "-(i/c) log(omega - L^m)",
        Family::Boundary => "T_G = T_{1,1} + T_{1,1}*",
    }
}

fn domain_label(d: CcrDomain) -> &'static str {
    match d {
        CcrDomain::InfiniteDim => "infinite-dimensional",
        CcrDomain::FiniteDim => "finite-dimensional",
        CcrDomain::Dense => "dense",
    }
}

fn witness(kind: &str, params: String, value: f64, ok: bool) -> Witness {
    Witness { kind: kind.into(), params, value, verdict: if ok { Verdict::Pass } else { Verdict::Fail } }
}

fn ccr_witness(kind: &str, params: String, r: &crate::ccr::CcrReport) -> Witness {
    Witness { kind: kind.into(), params, value: r.residual_norm, verdict: r.verdict }
}

fn entry_witnesses(cfg: &ExperimentConfig, omega: Complex64, m: usize, family: Family) -> Result<Vec<Witness>> {
    let tol = &cfg.tolerances;
    let (d, sd) = (cfg.dim, cfg.series_dim);
    let mut out = Vec::new();
    match family {
        Family::Zero => {
            let t = conjugate_operator(omega, m, sd)?.time_operator();
            for &ka in &cfg.grid.alpha {
                let v = generalized_eigen_vector(&Weight::identity(), m, Complex64::new(ka / m as f64, 0.0), sd)?;
                let r = ccr_check(&t, &v, MINUS_I, tol.series);
                out.push(ccr_witness("ccr", format!("k_alpha={}", fmt_f64(ka)), &r));
            }
            // geometric vectors are eigenvectors of L^m with eigenvalue b^m, so
            // the Rayleigh quotients of log L^m are m log b: unbounded below
            let op = conjugate_operator(omega, m, sd)?;
            let pol = SeriesPolicy::default();
            let mut prev = f64::INFINITY;
            for a in [0.95f64, 0.9, 0.85] {
                let v = geometric_vector(Complex64::new(a, 0.0), sd)?;
                let (w, _) = op.apply_log(&v, &pol)?;
                let q = (v.inner(&w)? / v.norm_sqr()).re;
                let ok = q < prev && (q - m as f64 * a.ln()).abs() <= tol.series;
                out.push(witness("rayleigh_log", format!("b={}", fmt_f64(a)), q, ok));
                prev = q;
            }
        }
        Family::OpenDisc => {
            for &c in &cfg.grid.c {
                let cc = Complex64::new(c, 0.0);
                let roots = finite_ccr_root_solver(omega, m, cc)?;
                out.push(witness("root_count", format!("c={}", fmt_f64(c)), roots.len() as f64, roots.len() == m));
                let t = conjugate_operator(omega, m, sd)?.scaled_by_c(cc);
                for (k, root) in roots.iter().enumerate() {
                    if !root.admissible() {
                        out.push(witness(
                            "root_outside",
                            format!("c={};root={k};alpha={}", fmt_f64(c), root.alpha),
                            root.alpha.norm(),
                            true,
                        ));
                        continue;
                    }
                    let v = geometric_vector(root.alpha, sd)?;
                    let r = ccr_check(&t, &v, MINUS_I, tol.series);
                    out.push(ccr_witness("ccr", format!("c={};root={k};alpha={}", fmt_f64(c), root.alpha), &r));
                }
            }
        }
        Family::Boundary => {
            let t = boundary_operator(omega, m, d)?;
            let n = t.norm_estimate()?;
            // constant diagonal -2 arg(omega)/m plus (1/m) times a phase
            // conjugate of the Galapon operator on each residue class
            let bound = (std::f64::consts::PI + tol.hilbert + 2.0 * omega.arg().abs()) / m as f64;
            out.push(witness("norm", format!("dim={d};bound={}", fmt_f64(bound)), n, n <= bound));
            let exact = tol.exact_per_dim * d as f64;
            for &seed in &cfg.seeds {
                let phi = ccr_domain_sample(&DomainConstraint::ResidueClassZero { omega, m }, seed, d)?;
                let r = ccr_check(&t, &phi, MINUS_I, exact);
                out.push(ccr_witness("ccr", format!("seed={seed}"), &r));
            }
            if m == 1 && omega == Complex64::new(1.0, 0.0) {
                let g = galapon_operator(d).norm_estimate()?;
                out.push(witness("galapon_norm", format!("dim={d}"), g, g <= std::f64::consts::PI + tol.hilbert));
            }
        }
    }
    Ok(out)
}

pub fn table1_report(cfg: &ExperimentConfig) -> Result<Table1> {
    let cells: Vec<(Complex64, usize)> =
        cfg.grid.omegas().into_iter().flat_map(|w| cfg.grid.m.iter().map(move |&m| (w, m))).collect();
    let entries: Vec<Result<Table1Entry>> = cells
        .par_iter()
        .map(|&(w, m)| {
            let fam = classify(w, m)?;
            let witnesses = entry_witnesses(cfg, w, m, fam.classification)?;
            Ok(Table1Entry {
                omega: [w.re, w.im],
                m,
                family: fam.classification,
                bounded: fam.expected.bounded,
                ccr_domain: fam.expected.ccr_domain,
                witnesses,
            })
        })
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let families = [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)]
        .into_iter()
        .map(|w| {
            let f = classify(w, 1)?;
            Ok(FamilyRow {
                family: f.classification,
                label: family_label(f.classification).into(),
                bounded: f.expected.bounded,
                ccr_domain: f.expected.ccr_domain,
                example: family_example(f.classification).into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1 { dim: cfg.dim, series_dim: cfg.series_dim, families, entries })
}

impl Table1 {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| family | bounded | CCR domain | example | cells | witnesses passed |\n|---|---|---|---|---|---|\n");
        for row in &self.families {
            let cells: Vec<&Table1Entry> = self.entries.iter().filter(|e| e.family == row.family).collect();
            let total: usize = cells.iter().map(|e| e.witnesses.len()).sum();
            let passed: usize =
                cells.iter().flat_map(|e| &e.witnesses).filter(|w| w.verdict == Verdict::Pass).count();
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} | {passed}/{total} |\n",
                row.label,
                if row.bounded { "yes" } else { "no" },
                domain_label(row.ccr_domain),
                row.example,
                cells.len()
            ));
        }
        s
    }

    /// Flat witness listing for `classification.csv`.
    pub fn witness_table(&self) -> Table {
        let rows = self
            .entries
            .iter()
            .flat_map(|e| {
                e.witnesses.iter().map(move |w| Row {
                    cols: vec![
                        fmt_f64(e.omega[0]),
                        fmt_f64(e.omega[1]),
                        e.m.to_string(),
                        family_label(e.family).into(),
                        w.kind.clone(),
                        w.params.clone(),
                        fmt_f64(w.value),
                    ],
                    verdict: w.verdict,
                })
            })
            .collect();
        Table {
            file: "classification.csv".into(),
            header: vec!["omega_re", "omega_im", "m", "family", "witness", "params", "value"],
            rows,
        }
    }
}
