use serde::{Deserialize, Serialize};

use super::{check_dim, check_trials, Estimate, MonteCarlo, SeriesEstimate, SeriesMeta};
use crate::error::{invalid, Result};
use crate::lattice::{LatticePoint, PointSet};
use crate::sparse::SparseDiagonal;
use crate::walker::{derive_seed, SiteIndex, StreamSeed, WalkStream};

/// Horizon-truncated capacity `Σ_{x ∈ A} P_x(no visit to A in 1..=horizon)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    /// `sqrt(Σ p(1-p)/n)` over the per-site escape estimates.
    pub std_error: f64,
    /// Change of `value` when the horizon is doubled on the same trials.
    pub bias_delta: Option<f64>,
    pub per_site: Vec<(LatticePoint, Estimate)>,
    pub horizon: u64,
    pub trials_per_point: u64,
    pub master_seed: u64,
}

/// One dyadic slice of the Wiener sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerTerm {
    pub slice_size: usize,
    pub capacity: Option<CapacityEstimate>,
    /// `2^{-k} cap(A_k)`
    pub summand: f64,
    pub running_sum: f64,
    /// `2^{-k} |A_k|`
    pub ceiling: f64,
    /// `2^{-k} C_{2^k}`
    pub count_ceiling: f64,
}

impl MonteCarlo {
    /// First visit time to `target` in steps `1..=run` for trial `i`.
    fn visit_time(&self, start: &LatticePoint, index: &SiteIndex, master_seed: u64, i: u64, run: u64) -> Option<u64> {
        let mut walk = WalkStream::new(start.clone(), StreamSeed::child(master_seed, i));
        walk.first_visit(index, run)
    }

    /// `P_start(walk visits target in steps 1..=horizon)`. For `start` in
    /// `target` this is the truncated return probability; otherwise the
    /// truncated hitting probability.
    pub fn estimate_return(
        &self,
        start: &LatticePoint,
        target: &PointSet,
        horizon: u64,
        trials: u64,
        master_seed: u64,
    ) -> Result<Estimate> {
        Ok(self.return_and_escape(start, target, horizon, trials, master_seed)?.0)
    }

    /// Complement of [`estimate_return`](Self::estimate_return) on the same trials.
    pub fn estimate_escape(
        &self,
        start: &LatticePoint,
        target: &PointSet,
        horizon: u64,
        trials: u64,
        master_seed: u64,
    ) -> Result<Estimate> {
        Ok(self.return_and_escape(start, target, horizon, trials, master_seed)?.1)
    }

    /// Return and escape estimates from one pass over the trials.
    pub fn return_and_escape(
        &self,
        start: &LatticePoint,
        target: &PointSet,
        horizon: u64,
        trials: u64,
        master_seed: u64,
    ) -> Result<(Estimate, Estimate)> {
        check_dim(target.dim(), start.dim())?;
        if horizon < 1 {
            return Err(invalid("return/escape estimates need horizon >= 1"));
        }
        let index = SiteIndex::new(target);
        let (ret, counts) = self.event_estimate(trials, horizon, master_seed, |i, run| {
            self.visit_time(start, &index, master_seed, i, run)
        })?;
        let esc = Estimate::from_counts(trials - counts[0], trials, self.level, horizon, master_seed)?
            .with_bias(self.bias_probe.then_some(counts[2]));
        Ok((ret, esc))
    }

    /// Self-return probability of the origin in `Z^3`.
    pub fn polya_baseline(&self, horizon: u64, trials: u64, master_seed: u64) -> Result<Estimate> {
        let origin = LatticePoint::origin(3);
        let target = PointSet::from_points([origin.clone()])?;
        self.estimate_return(&origin, &target, horizon, trials, master_seed)
    }

    /// Capacity of a finite set in `Z^d`, `d >= 3`, as a sum of truncated
    /// escape probabilities. The trials of site `x` are seeded by
    /// `derive_seed(master_seed, x)`, so a site reuses its walks in every set.
    pub fn capacity_estimate(
        &self,
        target: &PointSet,
        horizon: u64,
        trials_per_point: u64,
        master_seed: u64,
    ) -> Result<CapacityEstimate> {
        if target.is_empty() {
            return Err(invalid("capacity needs a non-empty set"));
        }
        if target.dim() < 3 {
            return Err(invalid(format!("capacity needs a transient walk (d >= 3), got d={}", target.dim())));
        }
        let mut value = 0.0;
        let mut var = 0.0;
        let mut delta = 0.0;
        let mut per_site = Vec::with_capacity(target.len());
        for x in target.sorted() {
            let seed = derive_seed(master_seed, x.coords());
            let esc = self.estimate_escape(&x, target, horizon, trials_per_point, seed)?;
            value += esc.p_hat;
            var += esc.p_hat * (1.0 - esc.p_hat) / trials_per_point as f64;
            delta += esc.bias_delta.unwrap_or(0.0);
            per_site.push((x, esc));
        }
        Ok(CapacityEstimate {
            value,
            std_error: var.sqrt(),
            bias_delta: self.bias_probe.then_some(delta),
            per_site,
            horizon,
            trials_per_point,
            master_seed,
        })
    }

    /// Per-slice terms `2^{-k} cap(A_k)` of the Wiener sum for the sparse
    /// diagonal, `k = 1..=k_max`, with the running sum and both ceilings.
    pub fn wiener_partial_sum(
        &self,
        k_max: u32,
        epsilon: f64,
        horizon: u64,
        trials_per_point: u64,
        master_seed: u64,
    ) -> Result<SeriesEstimate<WienerTerm>> {
        let sd = SparseDiagonal::new(epsilon)?;
        let slices = sd.annular_slices(k_max)?;
        let mut running = 0.0;
        let mut entries = Vec::with_capacity(slices.len());
        for slice in slices {
            let scale = 0.5f64.powi(slice.k as i32);
            let capacity = if slice.is_empty() {
                None
            } else {
                Some(self.capacity_estimate(&slice.points, horizon, trials_per_point, master_seed)?)
            };
            let summand = capacity.as_ref().map_or(0.0, |c| scale * c.value);
            running += summand;
            entries.push((
                slice.k as u64,
                WienerTerm {
                    slice_size: slice.len(),
                    capacity,
                    summand,
                    running_sum: running,
                    ceiling: scale * slice.len() as f64,
                    count_ceiling: scale * sd.c_n(1u64 << slice.k) as f64,
                },
            ));
        }
        SeriesEstimate::new(
            SeriesMeta {
                experiment: "wiener_partial_sum".into(),
                epsilon: Some(epsilon),
                d: 3,
                horizon,
                trials: trials_per_point,
                master_seed,
            },
            entries,
        )
    }

    /// Return probabilities to the sparse diagonal from `x_k = (n_k, n_k, n_k)`.
    /// The set is truncated at `n_{10 max(ks)}`. All `k` share the master seed,
    /// so the walk increments are paired across `k` and with
    /// [`polya_baseline`](Self::polya_baseline).
    pub fn return_profile(
        &self,
        ks: &[u64],
        epsilon: f64,
        horizon: u64,
        trials: u64,
        master_seed: u64,
    ) -> Result<SeriesEstimate> {
        let k_top = *ks.iter().max().ok_or_else(|| invalid("k range is empty"))?;
        if ks.contains(&0) {
            return Err(invalid("k starts at 1"));
        }
        let sd = SparseDiagonal::new(epsilon)?;
        let target = sd.points(sd.n_k(10 * k_top as usize));
        let mut entries = Vec::with_capacity(ks.len());
        let mut sorted = ks.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for k in sorted {
            let start = LatticePoint::diagonal(3, sd.n_k(k as usize) as i64);
            entries.push((k, self.estimate_return(&start, &target, horizon, trials, master_seed)?));
        }
        SeriesEstimate::new(
            SeriesMeta {
                experiment: "return_profile".into(),
                epsilon: Some(epsilon),
                d: 3,
                horizon,
                trials,
                master_seed,
            },
            entries,
        )
    }

    /// Probability that a `d`-dimensional walk from the origin revisits the
    /// diagonal (its difference walk revisits zero) within `horizon` steps.
    pub fn diagonal_return_probability(&self, d: usize, horizon: u64, trials: u64, master_seed: u64) -> Result<Estimate> {
        if d < 3 {
            return Err(invalid(format!("diagonal return needs d >= 3, got {d}")));
        }
        check_trials(trials)?;
        let (est, _) = self.event_estimate(trials, horizon, master_seed, |i, run| {
            let mut walk = WalkStream::new(LatticePoint::origin(d), StreamSeed::child(master_seed, i));
            walk.walk_until(run, |_, c| c.iter().all(|&x| x == c[0]))
        })?;
        Ok(est)
    }
}
