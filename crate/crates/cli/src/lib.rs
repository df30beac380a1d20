//! Experiment runner: named experiments, layered configuration, CSV outputs
//! and a checksummed manifest per run directory.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 an exact
//! check inside the experiment failed (outputs are still written).

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{ExperimentConfig, DEFAULT_SEED};
pub use output::{RunOutput, RunRecord, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Experiment(_) => 3,
        }
    }
}

impl From<diagwalk::Error> for CliError {
    fn from(e: diagwalk::Error) -> Self {
        match e {
            diagwalk::Error::InvalidArgument(_) | diagwalk::Error::DimensionMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Experiment(other.to_string()),
        }
    }
}

/// Least-squares line through `(x, y)` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares; `None` with fewer than two distinct `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len().min(ys.len()) as f64;
    if n < 2.0 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Parser)]
#[command(name = "diagwalk", version, about = "Random-walk cover and return experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Exponent of the sparse diagonal sequence.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Master seed; every trial stream derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per estimate (per site for capacity).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Step horizon (base step cap for zwalk).
    #[arg(long, global = true)]
    pub horizon: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Confidence level of the intervals.
    #[arg(long, global = true)]
    pub level: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Flat key = value config file; flags win over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Also run every trial to twice the horizon and report the change.
    #[arg(long, global = true)]
    pub bias_probe: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// n_k and C_N tables with the counting lower bound.
    Sequence {
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        n_min: Option<u64>,
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Cover probabilities of diagonal segments and their log-linear fit.
    Figure5 {
        #[arg(long)]
        i_max: Option<u64>,
    },
    /// Return probabilities to the sparse diagonal and the self-return baseline.
    Returns {
        #[arg(long)]
        k_min: Option<u64>,
        #[arg(long)]
        k_max: Option<u64>,
        /// Also estimate the diagonal-return probability in this dimension.
        #[arg(long)]
        diagonal_d: Option<usize>,
    },
    /// Capacity terms of the Wiener sum over dyadic slices.
    Capacity {
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Forced-prefix enumeration for the comparison set.
    Counterexample {
        /// exact or statistical
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        k_min: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
        /// Number of blocks in the set.
        #[arg(long)]
        blocks: Option<u32>,
    },
    /// Exploratory interval cover by the Z walk.
    Zwalk {
        #[arg(long)]
        n_min: Option<u64>,
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Staircase versus axis path cover probabilities.
    ComparePaths {
        #[arg(long)]
        n: Option<u64>,
        /// Write both paths in the point-per-line text format.
        #[arg(long)]
        dump_path: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sequence { .. } => "sequence",
            Command::Figure5 { .. } => "figure5",
            Command::Returns { .. } => "returns",
            Command::Capacity { .. } => "capacity",
            Command::Counterexample { .. } => "counterexample",
            Command::Zwalk { .. } => "zwalk",
            Command::ComparePaths { .. } => "compare-paths",
        }
    }

    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        fn s<T: ToString>(x: &Option<T>) -> Option<String> {
            x.as_ref().map(T::to_string)
        }
        match self {
            Command::Sequence { k_max, n_min, n_max } => {
                vec![("k_max", s(k_max)), ("n_min", s(n_min)), ("n_max", s(n_max))]
            }
            Command::Figure5 { i_max } => vec![("i_max", s(i_max))],
            Command::Returns { k_min, k_max, diagonal_d } => {
                vec![("k_min", s(k_min)), ("k_max", s(k_max)), ("diagonal_d", s(diagonal_d))]
            }
            Command::Capacity { k_max } => vec![("k_max", s(k_max))],
            Command::Counterexample { mode, k_min, k_max, blocks } => vec![
                ("mode", s(mode)),
                ("k_min", s(k_min)),
                ("k_max", s(k_max)),
                ("blocks", s(blocks)),
            ],
            Command::Zwalk { n_min, n_max } => vec![("n_min", s(n_min)), ("n_max", s(n_max))],
            Command::ComparePaths { n, dump_path } => {
                vec![("n", s(n)), ("dump_path", dump_path.then(|| "true".to_string()))]
            }
        }
    }
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let g = &self.global;
        let mut over: Vec<(String, String)> = Vec::new();
        let globals = [
            ("epsilon", g.epsilon.map(|x| x.to_string())),
            ("seed", g.seed.map(|x| x.to_string())),
            ("trials", g.trials.map(|x| x.to_string())),
            ("horizon", g.horizon.map(|x| x.to_string())),
            ("out", g.out.as_ref().map(|p| p.display().to_string())),
            ("level", g.level.map(|x| x.to_string())),
            ("workers", g.workers.map(|x| x.to_string())),
            ("bias_probe", g.bias_probe.then(|| "true".to_string())),
        ];
        for (k, v) in globals.into_iter().chain(self.command.overrides()) {
            if let Some(v) = v {
                over.push((k.to_string(), v));
            }
        }
        ExperimentConfig::resolve(self.command.name(), g.config.as_deref(), &over)
    }
}

/// Runs the configured experiment and writes its run directory. A failed
/// exact check is reported through [`RunRecord::failure`] after writing.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunRecord, CliError> {
    let started = output::unix_now();
    let out = commands::run_experiment(cfg)?;
    output::write_run(cfg, &out, started)
}
