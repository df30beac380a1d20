//! The sparse diagonal subset `{(n_k, n_k, n_k)}` of `Z^3`, its counting
//! function and dyadic slices, and the non-uniformly-transient comparison set.
//!
//! `n_k = ⌈S(k)⌉` with `S(k) = Σ_{i=1}^k (ln i)^{1+eps}` (natural log).
//! Partial sums are accumulated with Neumaier compensation and memoized per
//! instance. If `S(k)` lies within [`NEAR_INTEGER_GUARD`] of an integer it is
//! rounded to that integer before the ceiling is taken.

use std::sync::RwLock;


use crate::error::{invalid, Result};
use crate::lattice::{LatticePoint, PointSet};
use crate::quadrature::{log_power, Compensated};

pub const NEAR_INTEGER_GUARD: f64 = 1e-9;

/// Largest dyadic exponent accepted by [`annular_slices`] and [`counterexample_set`].
pub const MAX_DYADIC_EXPONENT: u32 = 40;

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

fn guarded_ceil(s: f64) -> u64 {
    let r = s.round();
    if (s - r).abs() < NEAR_INTEGER_GUARD {
        r as u64
    } else {
        s.ceil() as u64
    }
}

#[derive(Debug, Default)]
struct Table {
    acc: Compensated,
    // sums[k - 1] = S(k), n[k - 1] = n_k
    sums: Vec<f64>,
    n: Vec<u64>,
}

impl Table {
    fn extend_to(&mut self, k: usize, epsilon: f64) {
        while self.sums.len() < k {
            let i = self.sums.len() + 1;
            self.acc.add(log_power(i as f64, epsilon));
            let s = self.acc.value();
            self.sums.push(s);
            self.n.push(guarded_ceil(s));
        }
    }
}

/// Memoized generator for `S(k)`, `n_k` and `C_N` at a fixed `eps`.
///
/// Safe to share between threads: the table grows under a write lock and is
/// read under a shared lock.
#[derive(Debug)]
pub struct SparseDiagonal {
    epsilon: f64,
    table: RwLock<Table>,
}

impl SparseDiagonal {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(SparseDiagonal {
            epsilon,
            table: RwLock::new(Table::default()),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn with_table<T>(&self, k: usize, f: impl FnOnce(&Table) -> T) -> T {
        {
            let t = self.table.read().expect("sparse table lock poisoned");
            if t.sums.len() >= k {
                return f(&t);
            }
        }
        let mut t = self.table.write().expect("sparse table lock poisoned");
        t.extend_to(k, self.epsilon);
        f(&t)
    }

    /// `S(k)`. Panics if `k == 0`.
    pub fn partial_sum(&self, k: usize) -> f64 {
        assert!(k >= 1, "k starts at 1");
        self.with_table(k, |t| t.sums[k - 1])
    }

    /// `n_k`. Panics if `k == 0`.
    pub fn n_k(&self, k: usize) -> u64 {
        assert!(k >= 1, "k starts at 1");
        self.with_table(k, |t| t.n[k - 1])
    }

    /// `(n_1, ..., n_k)`.
    pub fn prefix(&self, k: usize) -> Vec<u64> {
        self.with_table(k, |t| t.n[..k].to_vec())
    }

    /// `C_N`, the largest `k` with `n_k <= N`.
    pub fn c_n(&self, n: u64) -> usize {
        loop {
            let found = {
                let t = self.table.read().expect("sparse table lock poisoned");
                match t.n.last() {
                    Some(&last) if last > n => Some(t.n.partition_point(|&v| v <= n)),
                    _ => None,
                }
            };
            if let Some(c) = found {
                return c;
            }
            let len = self.table.read().expect("sparse table lock poisoned").n.len();
            let mut t = self.table.write().expect("sparse table lock poisoned");
            t.extend_to((2 * len).max(64), self.epsilon);
        }
    }

    /// All `n_k <= max`, increasing.
    pub fn values_up_to(&self, max: u64) -> Vec<u64> {
        let c = self.c_n(max);
        self.prefix(c)
    }

    /// `{(n_k, n_k, n_k) : n_k <= max}`.
    pub fn points(&self, max: u64) -> PointSet {
        let mut set = PointSet::empty(3);
        for m in self.values_up_to(max) {
            set.insert(LatticePoint::diagonal(3, m as i64)).expect("dimension 3");
        }
        set
    }

    /// Slices `A_1, ..., A_{k_max}` of the dyadic L2 annuli.
    pub fn annular_slices(&self, k_max: u32) -> Result<Vec<AnnularSlice>> {
        if k_max < 1 || k_max > MAX_DYADIC_EXPONENT {
            return Err(invalid(format!("k_max must be in 1..={MAX_DYADIC_EXPONENT}, got {k_max}")));
        }
        let values = self.values_up_to(max_diagonal_in_ball(k_max));
        let mut out = Vec::with_capacity(k_max as usize);
        for k in 1..=k_max {
            let inner = 1u128 << (2 * (k - 1));
            let outer = 1u128 << (2 * k);
            let diagonal_values: Vec<u64> = values
                .iter()
                .copied()
                .filter(|&m| {
                    let r2 = 3 * (m as u128) * (m as u128);
                    inner < r2 && r2 <= outer
                })
                .collect();
            let mut points = PointSet::empty(3);
            for &m in &diagonal_values {
                points.insert(LatticePoint::diagonal(3, m as i64)).expect("dimension 3");
            }
            out.push(AnnularSlice {
                k,
                diagonal_values,
                points,
            });
        }
        Ok(out)
    }
}

/// `⌊2^k / √3⌋`: the largest `m` with `(m, m, m)` inside the L2 ball of radius `2^k`.
pub fn max_diagonal_in_ball(k: u32) -> u64 {
    let bound = 1u128 << (2 * k);
    // integer square root of bound / 3, fixed up from the float guess
    let mut m = ((bound / 3) as f64).sqrt() as u128;
    while 3 * m * m > bound {
        m -= 1;
    }
    while 3 * (m + 1) * (m + 1) <= bound {
        m += 1;
    }
    m as u64
}

/// Points of the sparse diagonal with `2^{k-1} < |x|_2 <= 2^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnularSlice {
    pub k: u32,
    /// The common coordinate `m` of each member, increasing.
    pub diagonal_values: Vec<u64>,
    pub points: PointSet,
}

impl AnnularSlice {
    pub fn len(&self) -> usize {
        self.diagonal_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal_values.is_empty()
    }
}

/// `S(k)` computed directly, without memoization.
pub fn log_power_sum(k: u64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if k < 1 {
        return Err(invalid("log_power_sum needs k >= 1"));
    }
    let mut acc = Compensated::default();
    for i in 1..=k {
        acc.add(log_power(i as f64, epsilon));
    }
    Ok(acc.value())
}

pub fn n_k(k: u64, epsilon: f64) -> Result<u64> {
    Ok(guarded_ceil(log_power_sum(k, epsilon)?))
}

pub fn c_n(n: u64, epsilon: f64) -> Result<usize> {
    Ok(SparseDiagonal::new(epsilon)?.c_n(n))
}

pub fn sparse_points(n: u64, epsilon: f64) -> Result<PointSet> {
    Ok(SparseDiagonal::new(epsilon)?.points(n))
}

pub fn annular_slices(k_max: u32, epsilon: f64) -> Result<Vec<AnnularSlice>> {
    SparseDiagonal::new(epsilon)?.annular_slices(k_max)
}

/// `2^{-1-eps} N (ln N)^{-1-eps}`, the lower bound on `C_N` for `N >= 2`.
pub fn lemma_lower_bound(n: u64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(invalid(format!("lower bound defined for N >= 2, got {n}")));
    }
    let nf = n as f64;
    Ok(2f64.powf(-1.0 - epsilon) * nf / nf.ln().powf(1.0 + epsilon))
}

/// The `k`-th block of the comparison set: two columns `(2^k, ±1, z)` and
/// two columns `(2^k ± 1, 0, z)` for `|z| <= k`, plus the centre `(2^k, 0, 0)`.
pub fn counterexample_block(k: u32) -> Vec<LatticePoint> {
    let x = 1i64 << k;
    let h = k as i64;
    let mut out = Vec::with_capacity(8 * k as usize + 5);
    for z in -h..=h {
        out.push(LatticePoint::from([x, 1, z]));
        out.push(LatticePoint::from([x, -1, z]));
        out.push(LatticePoint::from([x + 1, 0, z]));
        out.push(LatticePoint::from([x - 1, 0, z]));
    }
    out.push(LatticePoint::from([x, 0, 0]));
    out
}

/// Union of the blocks `1..=k_max`. Blocks 1 and 2 share the column `(3, 0, z)`, `|z| <= 1`.
pub fn counterexample_set(k_max: u32) -> Result<PointSet> {
    if k_max < 1 || k_max > MAX_DYADIC_EXPONENT {
        return Err(invalid(format!("k_max must be in 1..={MAX_DYADIC_EXPONENT}, got {k_max}")));
    }
    let mut set = PointSet::empty(3);
    for k in 1..=k_max {
        for p in counterexample_block(k) {
            set.insert(p)?;
        }
    }
    Ok(set)
}

/// Direct evaluation of the defining formula for membership in the union of blocks `1..=k_max`.
pub fn in_counterexample_set(p: &LatticePoint, k_max: u32) -> bool {
    let c = p.coords();
    if c.len() != 3 {
        return false;
    }
    let (x, y, z) = (c[0], c[1], c[2]);
    (1..=k_max).any(|k| {
        let base = 1i64 << k;
        let kz = k as i64;
        let column = z.abs() <= kz
            && ((x == base && y.abs() == 1) || (y == 0 && (x == base + 1 || x == base - 1)));
        column || (x == base && y == 0 && z == 0)
    })
}
