//! Experiment configuration: a versioned TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Ccr,
    Classification,
    Evolution,
    Galapon,
    Angle,
    Bridge,
    Divergence,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Classification,
        Suite::Ccr,
        Suite::Angle,
        Suite::Evolution,
        Suite::Galapon,
        Suite::Bridge,
        Suite::Divergence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Ccr => "ccr",
            Suite::Classification => "classification",
            Suite::Evolution => "evolution",
            Suite::Galapon => "galapon",
            Suite::Angle => "angle",
            Suite::Bridge => "bridge",
            Suite::Divergence => "divergence",
            Suite::All => "all",
        }
    }

    pub fn expand(&self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::EACH.to_vec(),
            s => vec![*s],
        }
    }
}

/// Parameter ranges; complex numbers are written as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub omega: Vec<[f64; 2]>,
    pub m: Vec<usize>,
    /// `k alpha` for the zero family and `alpha` for the Gaussian bridge.
    pub alpha: Vec<f64>,
    pub t: Vec<f64>,
    /// Super coherent parameters for the angle suite.
    pub beta: Vec<f64>,
    /// Commutator eigenvalues for the open-disc roots.
    pub c: Vec<f64>,
    /// Dimensions for the norm sweep.
    pub galapon_dims: Vec<usize>,
    /// Number of generated boundary points in the evolution sweep.
    pub evolution_points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        let h = 0.5 * 3f64.sqrt();
        Grid {
            omega: vec![[0.0, 0.0], [0.5, 0.0], [0.8, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, h]],
            m: vec![1, 2, 3],
            alpha: vec![0.3, 0.5, 0.7],
            t: vec![0.7, 1.3, 2.9],
            beta: vec![0.2, 0.5, 0.8],
            c: vec![0.2, 0.1],
            galapon_dims: vec![64, 128, 256, 512, 1024, 2048],
            evolution_points: 50,
        }
    }
}

impl Grid {
    pub fn omegas(&self) -> Vec<Complex64> {
        self.omega.iter().map(|z| Complex64::new(z[0], z[1])).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Per-dimension bound for the commutators that telescope exactly.
    pub exact_per_dim: f64,
    /// Series-evaluated commutators and forms.
    pub series: f64,
    pub eigen: f64,
    pub forward_identity: f64,
    pub periodicity: f64,
    pub diagonal: f64,
    pub bridge: f64,
    pub hilbert: f64,
    pub divergence_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact_per_dim: 1e-13,
            series: 1e-8,
            eigen: 1e-10,
            forward_identity: 1e-13,
            periodicity: 1e-12,
            diagonal: 1e-13,
            bridge: 1e-8,
            hilbert: 1e-9,
            divergence_band: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub suite: Suite,
    pub dim: usize,
    /// Dimension for series-evaluated families, whose vectors have tails.
    pub series_dim: usize,
    pub seeds: Vec<u64>,
    pub grid: Grid,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            suite: Suite::All,
            dim: 128,
            series_dim: 1024,
            seeds: vec![1, 2, 3],
            grid: Grid::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("oscitime-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {}; this build reads schema {SCHEMA_VERSION}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 16 {
            return Err(Error::Config(format!("dim must be at least 16, got {}", self.dim)));
        }
        if self.series_dim < 16 {
            return Err(Error::Config(format!("series_dim must be at least 16, got {}", self.series_dim)));
        }
        let g = &self.grid;
        if g.m.iter().any(|&m| m == 0) {
            return Err(Error::Config("grid.m entries must be positive".into()));
        }
        for s in self.suite.expand() {
            let empty = match s {
                Suite::Ccr => self.seeds.is_empty() || g.m.is_empty() || g.omega.is_empty(),
                Suite::Classification => g.m.is_empty() || g.omega.is_empty(),
                Suite::Evolution => g.m.is_empty() || (g.t.is_empty() && g.evolution_points == 0),
                Suite::Galapon => g.galapon_dims.is_empty(),
                Suite::Angle => g.beta.is_empty(),
                Suite::Bridge => g.alpha.is_empty(),
                Suite::Divergence => g.m.is_empty(),
                Suite::All => false,
            };
            if empty {
                return Err(Error::Config(format!("grid is empty for suite {}", s.name())));
            }
        }
        if g.omega.iter().any(|z| Complex64::new(z[0], z[1]).norm() > 1.0 + 1e-12) {
            return Err(Error::Config("grid.omega entries must satisfy |omega| <= 1".into()));
        }
        if g.beta.iter().any(|b| !(b.abs() < 1.0)) {
            return Err(Error::Config("grid.beta entries must satisfy |beta| < 1".into()));
        }
        Ok(())
    }
}
