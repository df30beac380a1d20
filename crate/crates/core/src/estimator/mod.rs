//! Reproducible parallel Monte Carlo estimators.
//!
//! Every estimator runs `trials` independent walks; trial `i` draws from
//! [`StreamSeed::child`]`(master_seed, i)`. Per-trial outcomes are merged by
//! integer addition, so results are identical for any worker count, and
//! two estimators called with the same master seed see the same increments
//! trial by trial (common random numbers).
//!
//! Events such as "returns before infinity" are truncated at a horizon. With
//! the bias probe enabled each trial runs to twice the horizon and the
//! estimate carries `p(2H) - p(H)` as a proxy for the truncation bias.

mod cover;
mod exact;
mod returns;
mod zwalk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
#[allow(unused_imports)] // referenced from the module docs
use crate::walker::StreamSeed;

pub use cover::{PathComparison, COVER_SERIES_MAX};
pub use exact::{forced_prefix_check, PrefixReport, MAX_EXACT_PREFIX};
pub use returns::{CapacityEstimate, WienerTerm};
pub use zwalk::ZCoverEstimate;

pub const DEFAULT_LEVEL: f64 = 0.95;

/// A binomial proportion with its Wilson interval, horizon and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub horizon: u64,
    pub master_seed: u64,
    /// `p(2 * horizon) - p(horizon)` on the same trials, when probed.
    pub bias_delta: Option<f64>,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64, level: f64, horizon: u64, master_seed: u64) -> Result<Self> {
        let (ci_low, ci_high) = wilson_interval(successes, trials, level)?;
        Ok(Estimate {
            trials,
            successes,
            p_hat: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            level,
            horizon,
            master_seed,
            bias_delta: None,
        })
    }

    fn with_bias(mut self, probed_successes: Option<u64>) -> Self {
        self.bias_delta = probed_successes.map(|s| (s as f64 - self.successes as f64) / self.trials as f64);
        self
    }

    /// Half of the interval width.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Two-sided normal quantile `z` with `P(|Z| <= z) = level`.
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must be in (0, 1), got {level}")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + 0.5 * level))
}

/// Wilson score interval for `successes` out of `trials`, clamped to `[0, 1]`.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(invalid(format!(
            "need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}"
        )));
    }
    let z = normal_quantile(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let hi = if successes == trials { 1.0 } else { (centre + half).clamp(p, 1.0) };
    Ok((lo, hi))
}

/// Metadata shared by all entries of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub experiment: String,
    pub epsilon: Option<f64>,
    pub d: usize,
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
}

/// Indexed results with strictly increasing indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate<T = Estimate> {
    pub meta: SeriesMeta,
    entries: Vec<(u64, T)>,
}

impl<T> SeriesEstimate<T> {
    pub fn new(meta: SeriesMeta, entries: Vec<(u64, T)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(invalid("series indices must be strictly increasing"));
        }
        Ok(SeriesEstimate { meta, entries })
    }

    pub fn entries(&self) -> &[(u64, T)] {
        &self.entries
    }

    pub fn get(&self, index: u64) -> Option<&T> {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .ok()
            .map(|pos| &self.entries[pos].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parallel trial driver and the home of every estimator.
#[derive(Clone, Debug)]
pub struct MonteCarlo {
    workers: usize,
    level: f64,
    bias_probe: bool,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        MonteCarlo {
            workers: 1,
            level: DEFAULT_LEVEL,
            bias_probe: false,
        }
    }
}

impl MonteCarlo {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(invalid("need at least one worker"));
        }
        Ok(MonteCarlo {
            workers,
            ..Default::default()
        })
    }

    pub fn with_level(mut self, level: f64) -> Result<Self> {
        normal_quantile(level)?;
        self.level = level;
        Ok(self)
    }

    pub fn with_bias_probe(mut self, on: bool) -> Self {
        self.bias_probe = on;
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn bias_probe(&self) -> bool {
        self.bias_probe
    }

    /// Runs `map` on every trial index and folds with `combine`, which must
    /// be associative and commutative for the result to be worker-independent.
    pub fn map_reduce<T, M, C>(&self, trials: u64, identity: T, map: M, combine: C) -> Result<T>
    where
        T: Send + Sync + Clone,
        M: Fn(u64, &mut T) + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        if self.workers == 1 {
            let mut acc = identity;
            for i in 0..trials {
                map(i, &mut acc);
            }
            return Ok(acc);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Pool(e.to_string()))?;
        Ok(pool.install(|| {
            (0..trials)
                .into_par_iter()
                .fold(
                    || identity.clone(),
                    |mut acc, i| {
                        map(i, &mut acc);
                        acc
                    },
                )
                .reduce(|| identity.clone(), &combine)
        }))
    }

    /// Counts trials by the bucket `classify` returns.
    pub fn tally<F>(&self, trials: u64, buckets: usize, classify: F) -> Result<Vec<u64>>
    where
        F: Fn(u64) -> usize + Sync,
    {
        self.map_reduce(
            trials,
            vec![0u64; buckets],
            |i, acc| acc[classify(i)] += 1,
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
    }

    fn run_horizon(&self, horizon: u64) -> u64 {
        if self.bias_probe {
            horizon.saturating_mul(2)
        } else {
            horizon
        }
    }

    /// Estimate of `P(event time <= horizon)` from per-trial event times,
    /// with the bias probe applied when enabled.
    fn event_estimate<F>(&self, trials: u64, horizon: u64, master_seed: u64, event: F) -> Result<(Estimate, Vec<u64>)>
    where
        F: Fn(u64, u64) -> Option<u64> + Sync,
    {
        check_trials(trials)?;
        let run = self.run_horizon(horizon);
        // buckets: [<= horizon, in (horizon, 2 horizon], never]
        let counts = self.tally(trials, 3, |i| match event(i, run) {
            Some(t) if t <= horizon => 0,
            Some(_) => 1,
            None => 2,
        })?;
        let est = Estimate::from_counts(counts[0], trials, self.level, horizon, master_seed)?
            .with_bias(self.bias_probe.then_some(counts[0] + counts[1]));
        Ok((est, counts))
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(invalid("need at least one trial"))
    } else {
        Ok(())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
