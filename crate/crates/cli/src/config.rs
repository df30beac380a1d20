//! Flat `key = value` experiment configuration.
//!
//! A run is configured in three layers, later layers winning: built-in
//! defaults for the subcommand, an optional config file, command-line flags.
//! The resolved map is echoed into the run manifest, so a manifest's config
//! section is itself a valid config file for re-running the experiment.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Master seed used when none is configured.
pub const DEFAULT_SEED: u64 = 20_240_917;

const GLOBAL_KEYS: &[(&str, &str)] = &[
    ("epsilon", "0.5"),
    ("seed", "20240917"),
    ("level", "0.95"),
    ("workers", "1"),
    ("bias_probe", "false"),
];

/// Subcommand names and their specific keys with defaults. An empty default
/// marks an optional key.
const COMMANDS: &[(&str, &[(&str, &str)])] = &[
    ("sequence", &[("k_max", "100"), ("n_min", "0"), ("n_max", "1000")]),
    ("figure5", &[("i_max", "9"), ("horizon", "5000"), ("trials", "100000")]),
    (
        "returns",
        &[
            ("k_min", "1"),
            ("k_max", "20"),
            ("horizon", "1000000"),
            ("trials", "10000"),
            ("diagonal_d", ""),
        ],
    ),
    ("capacity", &[("k_max", "12"), ("horizon", "100000"), ("trials", "1000")]),
    (
        "counterexample",
        &[
            ("mode", "exact"),
            ("k_min", "1"),
            ("k_max", "6"),
            ("blocks", "12"),
            ("horizon", "100000"),
            ("trials", "10000"),
        ],
    ),
    (
        "zwalk",
        &[("n_min", "3"), ("n_max", "12"), ("horizon", "1000000"), ("trials", "1000")],
    ),
    (
        "compare-paths",
        &[("n", "4"), ("horizon", "5000"), ("trials", "100000"), ("dump_path", "false")],
    ),
];

/// Resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    command: String,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Defaults for `command`, then `file`, then `overrides`.
    pub fn resolve(command: &str, file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut cfg = Self::defaults(command)?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn defaults(command: &str) -> Result<Self, CliError> {
        let specific = COMMANDS
            .iter()
            .find(|(name, _)| *name == command)
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{command}'")))?
            .1;
        let mut values: BTreeMap<String, String> = GLOBAL_KEYS
            .iter()
            .chain(specific.iter())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        values.insert("out".into(), format!("runs/{command}"));
        Ok(ExperimentConfig {
            command: command.to_string(),
            values,
        })
    }

    /// Applies the lines of a config file. `#` starts a comment; a
    /// `command = ...` line, if present, must name this subcommand.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), ()).is_some() {
                return Err(CliError::Config(format!("config line {}: duplicate key '{k}'", n + 1)));
            }
            if k == "command" {
                if v != self.command {
                    return Err(CliError::Config(format!(
                        "config is for '{v}' but the subcommand is '{}'",
                        self.command
                    )));
                }
                continue;
            }
            self.set(k, v)
                .map_err(|e| CliError::Config(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!(
                "'{key}' is not a setting of '{}'",
                self.command
            ))),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let eps: f64 = self.get("epsilon")?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CliError::Config(format!("epsilon must be positive, got {eps}")));
        }
        let level: f64 = self.get("level")?;
        if !(level > 0.0 && level < 1.0) {
            return Err(CliError::Config(format!("level must be in (0, 1), got {level}")));
        }
        if self.get::<usize>("workers")? == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        self.get::<u64>("seed")?;
        self.get::<bool>("bias_probe")?;
        if self.values.contains_key("trials") && self.get::<u64>("trials")? == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let raw = self
            .values
            .get(key)
            .ok_or_else(|| CliError::Config(format!("missing setting '{key}'")))?;
        raw.parse()
            .map_err(|e| CliError::Config(format!("bad value for '{key}' ({raw}): {e}")))
    }

    /// Like [`get`](Self::get), with an empty value meaning absent.
    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.values.get(key).map(String::as_str) {
            None | Some("") => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.get("epsilon").expect("validated")
    }

    pub fn seed(&self) -> u64 {
        self.get("seed").expect("validated")
    }

    pub fn level(&self) -> f64 {
        self.get("level").expect("validated")
    }

    pub fn workers(&self) -> usize {
        self.get("workers").expect("validated")
    }

    pub fn bias_probe(&self) -> bool {
        self.get("bias_probe").expect("validated")
    }

    pub fn out(&self) -> PathBuf {
        PathBuf::from(&self.values["out"])
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// The resolved configuration in config-file syntax.
    pub fn to_text(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

/// All subcommand names.
pub fn commands() -> impl Iterator<Item = &'static str> {
    COMMANDS.iter().map(|(name, _)| *name)
}
