//! Hermite-function coefficients of Gaussians: the closed form in terms of
//! super coherent vectors, and a Gauss-Hermite quadrature oracle.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{super_coherent_vector, FockVector, Truncation};
use crate::operators::fmt_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// `e^{-alpha x^2/2}` (even) or `x e^{-alpha x^2/2}` (odd), `0 < alpha < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub alpha: f64,
    pub parity: Parity,
}

impl GaussianProfile {
    pub fn new(alpha: f64, parity: Parity) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(GaussianProfile { alpha, parity })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let g = (-0.5 * self.alpha * x * x).exp();
        match self.parity {
            Parity::Even => g,
            Parity::Odd => x * g,
        }
    }

    /// `beta = (1 - alpha)/(1 + alpha)`
    pub fn beta(&self) -> f64 {
        beta_map(self.alpha)
    }

    /// Closed-form squared L2 norm.
    pub fn l2_norm_sqr(&self) -> f64 {
        let s = (std::f64::consts::PI / self.alpha).sqrt();
        match self.parity {
            Parity::Even => s,
            Parity::Odd => s / (2.0 * self.alpha),
        }
    }
}

/// `(1 - a)/(1 + a)`, its own inverse on `(0, 1)`.
pub fn beta_map(a: f64) -> f64 {
    (1.0 - a) / (1.0 + a)
}

/// Fock coefficients of the profile:
/// `pi^{1/4} sqrt(2/(1+alpha)) e^{beta a*^2/2} Omega`, and for the odd profile
/// an extra `sqrt(2)/(1+alpha) a*`.
pub fn gaussian_to_fock(profile: &GaussianProfile, dim: impl Into<Truncation>) -> Result<FockVector> {
    let p = GaussianProfile::new(profile.alpha, profile.parity)?;
    let a = p.alpha;
    let mut k = std::f64::consts::PI.powf(0.25) * (2.0 / (1.0 + a)).sqrt();
    let j = match p.parity {
        Parity::Even => 0,
        Parity::Odd => {
            k *= 2f64.sqrt() / (1.0 + a);
            1
        }
    };
    Ok(super_coherent_vector(Complex64::new(p.beta(), 0.0), j, dim)?.scale(Complex64::new(k, 0.0)))
}

/// Normalized Hermite functions without the Gaussian factor:
/// `h_n(x) e^{-x^2/2} = v_n(x)`, for `n <= n_max`.
pub fn hermite_polys(x: f64, n_max: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(n_max + 1);
    h.push(std::f64::consts::PI.powf(-0.25));
    if n_max >= 1 {
        h.push(2f64.sqrt() * x * h[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

/// `v_n(x)`
pub fn hermite_function(n: usize, x: f64) -> f64 {
    hermite_polys(x, n)[n] * (-0.5 * x * x).exp()
}

/// Gauss-Hermite nodes `y >= 0` with weights (the rule is symmetric).
///
/// The nodes from `gauss_quad` are polished by Newton steps on `h_q`, and
/// the weights recomputed as `1/sum_{k<q} h_k(y)^2`, which keeps the small
/// outer weights accurate in the relative sense.
struct HalfRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn rule(q: usize) -> Result<HalfRule> {
    let nz = NonZeroUsize::new(q).ok_or_else(|| Error::Parameter("quadrature size must be positive".into()))?;
    let gh = GaussHermite::new(nz);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for &y0 in gh.nodes() {
        if y0 < -1e-8 {
            continue;
        }
        let mut y = if q % 2 == 1 && y0.abs() < 1e-6 { 0.0 } else { y0 };
        if y != 0.0 {
            for _ in 0..4 {
                let h = hermite_polys(y, q);
                let step = h[q] / ((2.0 * q as f64).sqrt() * h[q - 1]);
                y -= step;
                if step.abs() < 1e-16 * y.abs() {
                    break;
                }
            }
        }
        let h = hermite_polys(y, q - 1);
        let w = 1.0 / h.iter().map(|v| v * v).sum::<f64>();
        nodes.push(y);
        weights.push(w);
    }
    Ok(HalfRule { nodes, weights })
}

impl HalfRule {
    /// Visits `(y, w)` pairs as `f(y) + f(-y)`, or `f(0)` once.
    fn for_each_pair(&self, mut f: impl FnMut(f64, f64, bool)) {
        for (&y, &w) in self.nodes.iter().zip(&self.weights) {
            f(y, w, y == 0.0);
        }
    }
}

/// All overlaps `(v_n, f)` for `n <= n_max` with one rule.
///
/// With `x = s y`, `s = sqrt(2/(1+alpha))`, the integrand becomes
/// `e^{-y^2}` times a polynomial of degree `n` or `n + 1`.
fn overlaps_with(gh: &HalfRule, profile: &GaussianProfile, n_max: usize) -> Vec<f64> {
    let s = (2.0 / (1.0 + profile.alpha)).sqrt();
    let mut out = vec![0.0; n_max + 1];
    gh.for_each_pair(|y, w, center| {
        let x = s * y;
        let h = hermite_polys(x, n_max);
        for (n, (o, hn)) in out.iter_mut().zip(&h).enumerate() {
            // h_n(-x) = (-1)^n h_n(x); the odd profile adds one more sign
            let odd_total = (n % 2 == 1) ^ (profile.parity == Parity::Odd);
            let g = match profile.parity {
                Parity::Even => *hn,
                Parity::Odd => hn * x,
            };
            if center {
                *o += w * g;
            } else if !odd_total {
                *o += 2.0 * w * g;
            }
        }
    });
    out.iter().map(|v| v * s).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub value: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// `(v_n, f)` by Gauss-Hermite quadrature with `q` nodes.
pub fn quadrature_overlap(n: usize, profile: &GaussianProfile, q: usize) -> Result<Overlap> {
    let value = overlaps_with(&rule(q)?, profile, n)[n];
    let warning = if q < n + 20 {
        let better = overlaps_with(&rule(n + 20)?, profile, n)[n];
        Some(format!("q = {q} < n + 20; estimated error {:.3e}", (better - value).abs()))
    } else {
        None
    };
    Ok(Overlap { value: Complex64::new(value, 0.0), warning })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeRow {
    pub parity: Parity,
    pub n: usize,
    pub analytic: Complex64,
    pub quadrature: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub alpha: f64,
    pub n_max: usize,
    pub max_deviation: f64,
    pub passed: bool,
    pub rows: Vec<BridgeRow>,
}

/// Analytic coefficients against quadrature for both parities, `n <= n_max`.
pub fn bridge_check(alpha: f64, n_max: usize, tol: f64) -> Result<BridgeReport> {
    let q = n_max + 40;
    let gh = rule(q)?;
    let dim = (n_max + 2).max(16);
    let rows: Vec<Vec<BridgeRow>> = [Parity::Even, Parity::Odd]
        .par_iter()
        .map(|&parity| -> Result<Vec<BridgeRow>> {
            let profile = GaussianProfile::new(alpha, parity)?;
            let v = gaussian_to_fock(&profile, dim)?;
            let quad = overlaps_with(&gh, &profile, n_max);
            Ok((0..=n_max)
                .map(|n| {
                    let analytic = v.coeff(n);
                    BridgeRow { parity, n, analytic, quadrature: quad[n], deviation: (analytic - quad[n]).norm() }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<BridgeRow> = rows.into_iter().flatten().collect();
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(BridgeReport { alpha, n_max, max_deviation, passed: max_deviation <= tol, rows })
}

impl BridgeReport {
    /// `parity,n,re,im,quadrature_re,deviation`
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["parity", "n", "re", "im", "quadrature_re", "deviation"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            let parity = match r.parity {
                Parity::Even => "even",
                Parity::Odd => "odd",
            };
            wr.write_record([
                parity.to_string(),
                r.n.to_string(),
                fmt_f64(r.analytic.re),
                fmt_f64(r.analytic.im),
                fmt_f64(r.quadrature),
                fmt_f64(r.deviation),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}
