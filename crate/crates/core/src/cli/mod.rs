//! Batch experiment runner behind the `oscitime` binary.

pub mod config;
pub mod suites;
pub mod table1;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::{ExperimentConfig, Suite};
pub use suites::{run_suite, SuiteOutcome, Tally};
pub use table1::{table1_report, Table1};

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "OSCITIME_THREADS";

#[derive(Debug, Parser)]
#[command(name = "oscitime", version, about = "Time operators of the harmonic oscillator: verification suites")]
pub struct Cli {
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub suite: Option<Suite>,
    /// Truncation dimension for the exact families.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Seed for sampled vectors; repeat for several.
    #[arg(long = "seed", global = true)]
    pub seeds: Vec<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance for the series-evaluated checks and the bridge.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Run the configured suite (default: all).
    Verify,
    /// Classification witnesses and table1.json.
    Classify,
    /// Periodicity and weak-Weyl probes on the boundary family.
    Evolve,
    /// Norms of the truncated Galapon operator.
    GalaponNorm,
    /// Gaussian to Fock bridge against quadrature.
    Bridge,
    /// Growth of the log a partial sums.
    Diverge,
    /// Print the classification table and write table1.md/table1.json.
    Report,
}

impl Command {
    fn forced_suite(&self) -> Option<Suite> {
        match self {
            Command::Verify => None,
            Command::Classify | Command::Report => Some(Suite::Classification),
            Command::Evolve => Some(Suite::Evolution),
            Command::GalaponNorm => Some(Suite::Galapon),
            Command::Bridge => Some(Suite::Bridge),
            Command::Diverge => Some(Suite::Divergence),
        }
    }
}

impl Cli {
    /// File values first, then flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.command.forced_suite() {
            cfg.suite = s;
        } else if let Some(s) = self.suite {
            cfg.suite = s;
        }
        if let Some(d) = self.dim {
            cfg.dim = d;
        }
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("--tol must be positive, got {t}")));
            }
            cfg.tolerances.series = t;
            cfg.tolerances.bridge = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    #[serde(flatten)]
    pub tally: Tally,
    pub files: Vec<String>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub dim: usize,
    pub series_dim: usize,
    pub seeds: Vec<u64>,
    pub suites: Vec<SuiteSummary>,
    #[serde(flatten)]
    pub total: Tally,
}

impl Summary {
    pub fn exit_code(&self) -> i32 {
        if self.total.fail == 0 {
            0
        } else {
            1
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, contents).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display())))
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs every suite selected by `cfg`, writing one CSV per table, any extra
/// documents and `summary.json` into `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<Summary> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    let pool = pool()?;
    let mut suites = Vec::new();
    let mut total = Tally::default();
    for s in cfg.suite.expand() {
        let out = pool.install(|| run_suite(s, cfg));
        let summary = match out {
            Ok(o) => {
                let mut files = Vec::new();
                for t in &o.tables {
                    write_file(dir, &t.file, &t.to_csv()?)?;
                    files.push(t.file.clone());
                }
                for (name, body) in &o.documents {
                    write_file(dir, name, body)?;
                    files.push(name.clone());
                }
                SuiteSummary { suite: s, tally: o.tally, files, errors: o.errors }
            }
            // a suite that cannot run at all counts as one failure
            Err(e) => SuiteSummary {
                suite: s,
                tally: Tally { fail: 1, ..Default::default() },
                files: Vec::new(),
                errors: vec![e.to_string()],
            },
        };
        total.merge(summary.tally);
        suites.push(summary);
    }
    let summary =
        Summary { schema: config::SCHEMA_VERSION, dim: cfg.dim, series_dim: cfg.series_dim, seeds: cfg.seeds.clone(), suites, total };
    write_file(dir, "summary.json", &(serde_json::to_string_pretty(&summary).expect("serializable") + "\n"))?;
    Ok(summary)
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("oscitime: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            if cli.command == Command::Report {
                if let Ok(md) = std::fs::read_to_string(cfg.output_dir.join("table1.md")) {
                    print!("{md}");
                }
            }
            for s in &summary.suites {
                println!(
                    "{:<15} pass {:>5}  fail {:>3}  inconclusive {:>3}",
                    s.suite.name(),
                    s.tally.pass,
                    s.tally.fail,
                    s.tally.inconclusive
                );
                for e in &s.errors {
                    eprintln!("  {}: {e}", s.suite.name());
                }
            }
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("oscitime: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}
