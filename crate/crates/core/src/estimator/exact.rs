use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sparse::{counterexample_set, MAX_DYADIC_EXPONENT};
use crate::walker::SiteIndex;

/// Largest `k` accepted by [`forced_prefix_check`]; the cost is `6^k`.
pub const MAX_EXACT_PREFIX: u32 = 6;

/// Outcome of the exhaustive prefix enumeration from `a_k = (2^k, 0, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixReport {
    pub k: u32,
    pub k_max: u32,
    /// `6^k`
    pub prefixes: u64,
    /// Prefixes whose points `1..=k` all lie outside the set.
    pub avoiding: u64,
    /// Avoiding prefixes made only of `±e_3` steps.
    pub z_only: u64,
    /// First steps (of 6) that land in the set.
    pub first_step_hits: u32,
    /// `avoiding / 6^k`, the exact probability of no visit in steps `1..=k`.
    pub avoid_fraction: f64,
    /// `3^{-k}`
    pub bound: f64,
    pub pass: bool,
}

/// Enumerates all `6^k` step sequences of length `k` from `(2^k, 0, 0)` and
/// checks that each one avoiding the comparison set (blocks `1..=k_max`)
/// moves only along the third axis. Since there are `2^k` such sequences,
/// this certifies `P(no visit in 1..=k) <= 3^{-k}`.
pub fn forced_prefix_check(k: u32, k_max: u32) -> Result<PrefixReport> {
    if k < 1 || k > MAX_EXACT_PREFIX {
        return Err(invalid(format!("exact prefix check needs k in 1..={MAX_EXACT_PREFIX}, got {k}")));
    }
    if k_max < k || k_max > MAX_DYADIC_EXPONENT {
        return Err(invalid(format!("need k <= k_max <= {MAX_DYADIC_EXPONENT}, got k={k}, k_max={k_max}")));
    }
    let index = SiteIndex::new(&counterexample_set(k_max)?);
    let start = [1i64 << k, 0, 0];
    let prefixes = 6u64.pow(k);
    let (mut avoiding, mut z_only) = (0u64, 0u64);
    for code in 0..prefixes {
        let mut pos = start;
        let mut rest = code;
        let mut hit = false;
        let mut only_z = true;
        for _ in 0..k {
            let u = (rest % 6) as usize;
            rest /= 6;
            pos[u / 2] += if u % 2 == 0 { 1 } else { -1 };
            only_z &= u / 2 == 2;
            if index.contains(&pos) {
                hit = true;
                break;
            }
        }
        if !hit {
            avoiding += 1;
            z_only += only_z as u64;
        }
    }
    let first_step_hits = (0..6)
        .filter(|&u| {
            let mut pos = start;
            pos[u / 2] += if u % 2 == 0 { 1 } else { -1 };
            index.contains(&pos)
        })
        .count() as u32;
    let avoid_fraction = avoiding as f64 / prefixes as f64;
    let bound = 3f64.powi(-(k as i32));
    Ok(PrefixReport {
        k,
        k_max,
        prefixes,
        avoiding,
        z_only,
        first_step_hits,
        avoid_fraction,
        bound,
        pass: avoiding == z_only && avoiding <= 1u64 << k,
    })
}
