use serde::{Deserialize, Serialize};

use super::{check_dim, check_trials, normal_quantile, Estimate, MonteCarlo, SeriesEstimate, SeriesMeta};
use crate::error::{invalid, Result};
use crate::lattice::{axis_path, staircase_path, LatticePoint, PointSet};
use crate::walker::{cover_with_index, CoverTracker, SiteIndex, StreamSeed, WalkStream};

/// Largest `i` accepted by [`MonteCarlo::cover_series`].
pub const COVER_SERIES_MAX: u64 = 62;

/// Paired cover estimates for the staircase and axis traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathComparison {
    pub n: u64,
    pub staircase: Estimate,
    pub axis: Estimate,
    pub staircase_size: usize,
    pub axis_size: usize,
    /// Mean of the per-trial difference `1[staircase covered] - 1[axis covered]`.
    pub difference: f64,
    pub diff_ci_low: f64,
    pub diff_ci_high: f64,
}

impl MonteCarlo {
    /// Fraction of walks from `start` that visit every point of `target`
    /// within `horizon` steps (the start counts at step 0).
    pub fn estimate_cover(
        &self,
        target: &PointSet,
        start: &LatticePoint,
        horizon: u64,
        trials: u64,
        master_seed: u64,
    ) -> Result<Estimate> {
        check_dim(target.dim(), start.dim())?;
        let index = SiteIndex::new(target);
        let (est, _) = self.event_estimate(trials, horizon, master_seed, |i, run| {
            let mut walk = WalkStream::new(start.clone(), StreamSeed::child(master_seed, i));
            cover_with_index(&mut walk, &index, run)
        })?;
        Ok(est)
    }

    /// Cover probabilities of `D_i = {(0,0,0), ..., (i,i,i)}` for
    /// `i = 0..=i_max` by a 3-d walk from the origin, all from the same trials:
    /// each trial records the largest `i` whose `D_i` it covered.
    pub fn cover_series(&self, i_max: u64, horizon: u64, trials: u64, master_seed: u64) -> Result<SeriesEstimate> {
        check_trials(trials)?;
        if i_max < 1 || i_max > COVER_SERIES_MAX {
            return Err(invalid(format!("i_max must be in 1..={COVER_SERIES_MAX}, got {i_max}")));
        }
        let run = self.run_horizon(horizon);
        let width = (i_max + 1) as usize;
        let full: u64 = if i_max == 63 { u64::MAX } else { (1u64 << (i_max + 1)) - 1 };
        let largest = |mask: u64| (mask.trailing_ones() as usize - 1).min(i_max as usize);
        // bucket = largest covered at horizon * width + largest covered at run horizon
        let counts = self.tally(trials, width * width, |i| {
            let mut walk = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(master_seed, i));
            let mut mask = 1u64;
            let mut at_horizon = 1u64;
            walk.walk_until(run, |t, c| {
                if c[0] == c[1] && c[1] == c[2] && (c[0] as u64) <= i_max {
                    mask |= 1 << c[0];
                    if t <= horizon {
                        at_horizon = mask;
                    }
                }
                mask == full
            });
            largest(at_horizon) * width + largest(mask)
        })?;
        let mut at_h = vec![0u64; width];
        let mut at_run = vec![0u64; width];
        for (b, &c) in counts.iter().enumerate() {
            at_h[b / width] += c;
            at_run[b % width] += c;
        }
        let mut entries = Vec::with_capacity(width);
        for i in 0..width {
            let covered: u64 = at_h[i..].iter().sum();
            let probed: u64 = at_run[i..].iter().sum();
            let est = Estimate::from_counts(covered, trials, self.level, horizon, master_seed)?
                .with_bias(self.bias_probe.then_some(probed));
            entries.push((i as u64, est));
        }
        SeriesEstimate::new(
            SeriesMeta {
                experiment: "cover_series".into(),
                epsilon: None,
                d: 3,
                horizon,
                trials,
                master_seed,
            },
            entries,
        )
    }

    /// Paired cover estimates of the staircase and axis paths of length `n`
    /// in `Z^3`: one walk per trial is checked against both traces.
    pub fn compare_paths(&self, n: u64, horizon: u64, trials: u64, master_seed: u64) -> Result<PathComparison> {
        check_trials(trials)?;
        let stair = staircase_path(3, n)?.trace();
        let axis = axis_path(3, n)?.trace();
        let stair_index = SiteIndex::new(&stair);
        let axis_index = SiteIndex::new(&axis);
        let counts = self.tally(trials, 4, |i| {
            let mut walk = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(master_seed, i));
            let mut s = CoverTracker::new(&stair_index);
            let mut a = CoverTracker::new(&axis_index);
            let origin = walk.position().coords().to_vec();
            let (mut s_done, mut a_done) = (s.visit(&origin, 0), a.visit(&origin, 0));
            if !(s_done && a_done) {
                walk.walk_until(horizon, |t, c| {
                    s_done = s.visit(c, t);
                    a_done = a.visit(c, t);
                    s_done && a_done
                });
            }
            2 * s_done as usize + a_done as usize
        })?;
        let (n01, n10, n11) = (counts[1], counts[2], counts[3]);
        let staircase = Estimate::from_counts(n10 + n11, trials, self.level, horizon, master_seed)?;
        let axis_est = Estimate::from_counts(n01 + n11, trials, self.level, horizon, master_seed)?;
        let nf = trials as f64;
        let mean = (n10 as f64 - n01 as f64) / nf;
        let second = (n10 + n01) as f64 / nf;
        let var = if trials > 1 {
            (second - mean * mean) * nf / (nf - 1.0)
        } else {
            0.0
        };
        let half = normal_quantile(self.level)? * (var.max(0.0) / nf).sqrt();
        Ok(PathComparison {
            n,
            staircase,
            axis: axis_est,
            staircase_size: stair.len(),
            axis_size: axis.len(),
            difference: mean,
            diff_ci_low: mean - half,
            diff_ci_high: mean + half,
        })
    }
}
