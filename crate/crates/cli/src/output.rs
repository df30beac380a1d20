//! Run directories: CSV tables, `summary.json`, and `manifest.json`.
//!
//! Tables are rendered fully in memory, written, and checksummed. The
//! manifest goes last, through a temporary file and a rename, so a run
//! directory with a manifest is always complete.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;
use diagwalk::estimator::Estimate;

/// Columns every estimate table starts with.
pub const ESTIMATE_COLUMNS: [&str; 11] = [
    "experiment",
    "epsilon",
    "N_or_k",
    "d",
    "horizon",
    "trials",
    "successes",
    "p_hat",
    "ci_low",
    "ci_high",
    "master_seed",
];

/// An in-memory CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// A table with [`ESTIMATE_COLUMNS`] followed by `extra`.
    pub fn estimates(name: &str, extra: &[&str]) -> Self {
        let header: Vec<&str> = ESTIMATE_COLUMNS.iter().chain(extra).copied().collect();
        Table::new(name, &header)
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// The leading columns for one estimate.
pub fn estimate_cells(experiment: &str, epsilon: Option<f64>, index: impl ToString, d: usize, e: &Estimate) -> Vec<String> {
    vec![
        experiment.to_string(),
        epsilon.map(|x| x.to_string()).unwrap_or_default(),
        index.to_string(),
        d.to_string(),
        e.horizon.to_string(),
        e.trials.to_string(),
        e.successes.to_string(),
        e.p_hat.to_string(),
        e.ci_low.to_string(),
        e.ci_high.to_string(),
        e.master_seed.to_string(),
    ]
}

/// Formats an optional number; absent values become empty cells.
pub fn opt_cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Everything an experiment produced.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// Extra plain-text files (e.g. path dumps), also checksummed.
    pub files: Vec<(String, Vec<u8>)>,
    /// Estimates for `summary.json`.
    pub summary: Vec<serde_json::Value>,
    /// Set when an exact check failed; outputs are still written.
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    wall_clock_seconds: f64,
    results: &'a [serde_json::Value],
}

#[derive(Serialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub experiment: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// sha256 of each data output, by file name.
    pub checksums: std::collections::BTreeMap<String, String>,
}

/// Paths and checksums of a finished run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub checksums: std::collections::BTreeMap<String, String>,
    pub failure: Option<String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Writes all outputs of a run into `cfg.out()`, then the manifest.
pub fn write_run(cfg: &ExperimentConfig, output: &RunOutput, started: f64) -> Result<RunRecord, CliError> {
    let dir = cfg.out();
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut checksums = std::collections::BTreeMap::new();
    let mut write = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        checksums.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    };
    for table in &output.tables {
        write(&format!("{}.csv", table.name), &table.render()?)?;
    }
    for (name, bytes) in &output.files {
        write(name, bytes)?;
    }
    let finished = unix_now();
    let summary = Summary {
        experiment: cfg.command(),
        wall_clock_seconds: finished - started,
        results: &output.summary,
    };
    let summary_json = serde_json::to_vec_pretty(&summary).map_err(io_err)?;
    fs::write(dir.join("summary.json"), summary_json).map_err(io_err)?;
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.command().to_string(),
        config: cfg.entries().clone(),
        started_unix: started,
        finished_unix: finished,
        checksums: checksums.clone(),
    };
    write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest).map_err(io_err)?)?;
    Ok(RunRecord {
        dir,
        checksums,
        failure: output.failure.clone(),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
