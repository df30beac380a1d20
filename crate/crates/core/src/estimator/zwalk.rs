use serde::{Deserialize, Serialize};

use super::{check_trials, Estimate, MonteCarlo, SeriesEstimate, SeriesMeta};
use crate::error::{invalid, Result};
use crate::lattice::LatticePoint;
use crate::walker::{StreamSeed, WalkStream};

/// Interval cover by the Z walk: does `{0, ..., floor(n/3)}` appear among the
/// first `n^3` Z values seen within the base step cap?
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZCoverEstimate {
    pub n: u64,
    pub estimate: Estimate,
    /// Z steps allowed, `n^3`.
    pub z_budget: u64,
    /// Z steps actually produced within the base step cap, averaged over trials.
    pub mean_z_steps: f64,
    pub max_z_steps: u64,
}

#[derive(Clone)]
struct ZTally {
    covered: Vec<u64>,
    probed: Vec<u64>,
    z_steps: u64,
    max_z: u64,
}

impl MonteCarlo {
    /// [`ZCoverEstimate`] for every `n` in `ns` from the same trials. Each trial
    /// runs the 3-d walk from the origin for `base_step_cap` steps and records
    /// the Z-step index at which each level `m` first appears.
    pub fn interval_cover_z_series(
        &self,
        ns: &[u64],
        base_step_cap: u64,
        trials: u64,
        master_seed: u64,
    ) -> Result<SeriesEstimate<ZCoverEstimate>> {
        check_trials(trials)?;
        let mut ns = ns.to_vec();
        ns.sort_unstable();
        ns.dedup();
        let Some(&n_top) = ns.last() else {
            return Err(invalid("N range is empty"));
        };
        if ns[0] < 2 {
            return Err(invalid("interval cover needs N >= 2"));
        }
        if n_top > 2_000_000 {
            return Err(invalid("N too large for an n^3 z-step budget"));
        }
        let levels = (n_top / 3) as usize + 1;
        let run = self.run_horizon(base_step_cap);
        let identity = ZTally {
            covered: vec![0; ns.len()],
            probed: vec![0; ns.len()],
            z_steps: 0,
            max_z: 0,
        };
        let tally = self.map_reduce(
            trials,
            identity,
            |i, acc| {
                // first (z index, base step) of each level m
                let mut first: Vec<Option<(u64, u64)>> = vec![None; levels];
                first[0] = Some((0, 0));
                let mut walk = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(master_seed, i));
                let mut z = 0u64;
                let mut z_at_cap = 0u64;
                walk.walk_until(run, |t, c| {
                    if c[0] == c[1] && c[1] == c[2] {
                        z += 1;
                        if t <= base_step_cap {
                            z_at_cap = z;
                        }
                        if c[0] >= 0 && (c[0] as usize) < levels && first[c[0] as usize].is_none() {
                            first[c[0] as usize] = Some((z, t));
                        }
                    }
                    false
                });
                acc.z_steps += z_at_cap;
                acc.max_z = acc.max_z.max(z_at_cap);
                for (j, &n) in ns.iter().enumerate() {
                    let budget = n * n * n;
                    let within = |cap: u64| {
                        first[..=(n / 3) as usize]
                            .iter()
                            .all(|f| matches!(f, Some((zi, t)) if *zi <= budget && *t <= cap))
                    };
                    acc.covered[j] += within(base_step_cap) as u64;
                    acc.probed[j] += within(run) as u64;
                }
            },
            |mut a, b| {
                for (x, y) in a.covered.iter_mut().zip(b.covered) {
                    *x += y;
                }
                for (x, y) in a.probed.iter_mut().zip(b.probed) {
                    *x += y;
                }
                a.z_steps += b.z_steps;
                a.max_z = a.max_z.max(b.max_z);
                a
            },
        )?;
        let mut entries = Vec::with_capacity(ns.len());
        for (j, &n) in ns.iter().enumerate() {
            let estimate = Estimate::from_counts(tally.covered[j], trials, self.level, base_step_cap, master_seed)?
                .with_bias(self.bias_probe.then_some(tally.probed[j]));
            entries.push((
                n,
                ZCoverEstimate {
                    n,
                    estimate,
                    z_budget: n * n * n,
                    mean_z_steps: tally.z_steps as f64 / trials as f64,
                    max_z_steps: tally.max_z,
                },
            ));
        }
        SeriesEstimate::new(
            SeriesMeta {
                experiment: "interval_cover_z".into(),
                epsilon: None,
                d: 3,
                horizon: base_step_cap,
                trials,
                master_seed,
            },
            entries,
        )
    }

    /// Single-`n` form of [`interval_cover_z_series`](Self::interval_cover_z_series).
    pub fn interval_cover_z(&self, n: u64, base_step_cap: u64, trials: u64, master_seed: u64) -> Result<ZCoverEstimate> {
        let series = self.interval_cover_z_series(&[n], base_step_cap, trials, master_seed)?;
        Ok(series.entries()[0].1.clone())
    }
}
