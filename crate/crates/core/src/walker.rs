//! Streaming simple random walk on `Z^d`.
//!
//! Randomness comes from ChaCha8, a counter-based generator: trial `i` of a
//! run with master seed `s` reads the keystream `(key = s, stream = i)`, so
//! a trial's steps do not depend on which worker runs it or in what order.
//!
//! Step encoding: a direction `u ∈ {0, ..., 2d-1}` moves by `+e_{u/2}` when
//! `u` is even and `-e_{u/2}` when odd (axes from zero). Directions come from
//! `w`-bit chunks `c` read from the low end of successive 64-bit outputs
//! (`w = 8` for `2d <= 64`, else 32): `u = (c * 2d) >> w`, and the chunk is
//! rejected when `(c * 2d) mod 2^w < 2^w mod 2d`, which makes `u` exactly
//! uniform with a rejection rate below 1/16.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticePoint, NNPath, PointSet};

/// Identifies one trial's random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    pub master: u64,
    pub index: u64,
}

impl StreamSeed {
    pub fn child(master: u64, index: u64) -> Self {
        StreamSeed { master, index }
    }

    fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed for a keyed sub-experiment, e.g. one site of a capacity sum.
/// Keying by site (not by position in a list) makes the same site reuse the
/// same trials in every set that contains it.
pub fn derive_seed(master: u64, key: &[i64]) -> u64 {
    key.iter()
        .fold(splitmix64(master), |h, &c| splitmix64(h ^ c as u64))
}

/// One simple random walk: position, step count and its random stream.
pub struct WalkStream {
    rng: ChaCha8Rng,
    pos: LatticePoint,
    steps: u64,
    bits: u64,
    avail: u32,
    width: u32,
    mask: u64,
    dirs: u64,
    reject_below: u64,
}

impl WalkStream {
    pub fn new(start: LatticePoint, seed: StreamSeed) -> Self {
        let dirs = 2 * start.dim() as u64;
        let width = if dirs <= 64 { 8 } else { 32 };
        WalkStream {
            rng: seed.rng(),
            pos: start,
            steps: 0,
            bits: 0,
            avail: 0,
            width,
            mask: (1u64 << width) - 1,
            dirs,
            reject_below: (1u64 << width) % dirs,
        }
    }

    pub fn dim(&self) -> usize {
        self.pos.dim()
    }

    pub fn position(&self) -> &LatticePoint {
        &self.pos
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    #[inline(always)]
    fn next_direction(&mut self) -> usize {
        loop {
            if self.avail == 0 {
                self.bits = self.rng.next_u64();
                self.avail = 64 / self.width;
            }
            let m = (self.bits & self.mask) * self.dirs;
            self.bits >>= self.width;
            self.avail -= 1;
            if m & self.mask >= self.reject_below {
                return (m >> self.width) as usize;
            }
        }
    }

    /// Moves to a uniformly chosen neighbour and returns the direction code.
    #[inline(always)]
    pub fn advance(&mut self) -> usize {
        let u = self.next_direction();
        self.pos.coords_mut()[u >> 1] += 1 - 2 * (u & 1) as i64;
        self.steps += 1;
        u
    }

    /// Advances up to `horizon` steps, calling `stop(t, position)` after
    /// step `t`; returns the first `t` for which it answers true. Same
    /// trajectory as repeated [`advance`](Self::advance), but small
    /// dimensions keep the position in registers.
    #[inline]
    pub fn walk_until<F: FnMut(u64, &[i64]) -> bool>(&mut self, horizon: u64, stop: F) -> Option<u64> {
        match self.dim() {
            1 => self.walk_fixed::<1, F>(horizon, stop),
            2 => self.walk_fixed::<2, F>(horizon, stop),
            3 => self.walk_fixed::<3, F>(horizon, stop),
            4 => self.walk_fixed::<4, F>(horizon, stop),
            _ => {
                let mut stop = stop;
                for t in 1..=horizon {
                    self.advance();
                    if stop(t, self.pos.coords()) {
                        return Some(t);
                    }
                }
                None
            }
        }
    }

    #[inline(always)]
    fn walk_fixed<const D: usize, F: FnMut(u64, &[i64]) -> bool>(&mut self, horizon: u64, mut stop: F) -> Option<u64> {
        let mut pos = [0i64; D];
        pos.copy_from_slice(self.pos.coords());
        let mut found = None;
        let mut t = 0;
        while t < horizon {
            t += 1;
            let u = self.next_direction();
            let (axis, sign) = (u >> 1, 1 - 2 * (u & 1) as i64);
            for (k, c) in pos.iter_mut().enumerate() {
                *c += if k == axis { sign } else { 0 };
            }
            if stop(t, &pos) {
                found = Some(t);
                break;
            }
        }
        self.steps += t;
        self.pos.coords_mut().copy_from_slice(&pos);
        found
    }

    /// First `t` in `1..=horizon` (counted from the current position) at
    /// which the walk is in `index`. Leaves the stream at that step, or after
    /// `horizon` steps.
    pub fn first_visit(&mut self, index: &SiteIndex, horizon: u64) -> Option<u64> {
        match &index.repr {
            Repr::Empty => self.walk_until(horizon, |_, _| false),
            Repr::Diagonal { lo, slots } => self.walk_until(horizon, |_, p| diagonal_slot(p, *lo, slots).is_some()),
            Repr::Dense(grid) => self.walk_until(horizon, |_, p| grid.slot(p).is_some()),
            Repr::Hashed(map) => self.walk_until(horizon, |_, p| map.contains_key(p)),
        }
    }
}

const NO_SLOT: u32 = u32::MAX;
const DIAGONAL_SPAN_LIMIT: i64 = 1 << 24;
const DENSE_VOLUME_LIMIT: u128 = 1 << 22;

/// A point set compiled for fast per-step lookup. Each member gets a slot
/// `0..len`, assigned in sorted order.
#[derive(Clone, Debug)]
pub struct SiteIndex {
    dim: usize,
    members: Vec<LatticePoint>,
    repr: Repr,
}

#[derive(Clone, Debug)]
enum Repr {
    Empty,
    // every member is (m, ..., m); slots indexed by m - lo
    Diagonal { lo: i64, slots: Vec<u32> },
    Dense(DenseGrid),
    Hashed(HashMap<Vec<i64>, u32>),
}

#[derive(Clone, Debug)]
struct DenseGrid {
    lo: Vec<i64>,
    extent: Vec<u64>,
    strides: Vec<usize>,
    slots: Vec<u32>,
}

impl DenseGrid {
    #[inline(always)]
    fn slot(&self, p: &[i64]) -> Option<u32> {
        let mut off = 0usize;
        for (i, &c) in p.iter().enumerate() {
            let r = c.wrapping_sub(self.lo[i]) as u64;
            if r >= self.extent[i] {
                return None;
            }
            off += r as usize * self.strides[i];
        }
        let s = self.slots[off];
        (s != NO_SLOT).then_some(s)
    }
}

#[inline(always)]
fn diagonal_slot(p: &[i64], lo: i64, slots: &[u32]) -> Option<u32> {
    let m = p[0];
    if p[1..].iter().any(|&c| c != m) {
        return None;
    }
    let off = m.wrapping_sub(lo) as u64;
    if off >= slots.len() as u64 {
        return None;
    }
    let s = slots[off as usize];
    (s != NO_SLOT).then_some(s)
}

impl SiteIndex {
    pub fn new(set: &PointSet) -> Self {
        let members = set.sorted();
        let dim = set.dim();
        let repr = Self::compile(dim, &members);
        SiteIndex { dim, members, repr }
    }

    fn compile(dim: usize, members: &[LatticePoint]) -> Repr {
        if members.is_empty() {
            return Repr::Empty;
        }
        let mut lo = members[0].coords().to_vec();
        let mut hi = lo.clone();
        for p in members {
            for (i, &c) in p.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        if dim >= 2 && members.iter().all(|p| p.is_diagonal()) && hi[0] - lo[0] < DIAGONAL_SPAN_LIMIT {
            let mut slots = vec![NO_SLOT; (hi[0] - lo[0] + 1) as usize];
            for (s, p) in members.iter().enumerate() {
                slots[(p.coords()[0] - lo[0]) as usize] = s as u32;
            }
            return Repr::Diagonal { lo: lo[0], slots };
        }
        let extent: Vec<u64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) as u64 + 1).collect();
        let volume = extent.iter().try_fold(1u128, |v, &e| v.checked_mul(e as u128));
        match volume {
            Some(v) if v <= DENSE_VOLUME_LIMIT => {
                let mut strides = vec![1usize; dim];
                for i in (0..dim.saturating_sub(1)).rev() {
                    strides[i] = strides[i + 1] * extent[i + 1] as usize;
                }
                let mut grid = DenseGrid {
                    lo,
                    extent,
                    strides,
                    slots: vec![NO_SLOT; v as usize],
                };
                for (s, p) in members.iter().enumerate() {
                    let off: usize = p
                        .coords()
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| (c - grid.lo[i]) as usize * grid.strides[i])
                        .sum();
                    grid.slots[off] = s as u32;
                }
                Repr::Dense(grid)
            }
            _ => Repr::Hashed(
                members
                    .iter()
                    .enumerate()
                    .map(|(s, p)| (p.coords().to_vec(), s as u32))
                    .collect(),
            ),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member at `slot`, in sorted order.
    pub fn member(&self, slot: usize) -> &LatticePoint {
        &self.members[slot]
    }

    #[inline]
    pub fn lookup(&self, p: &[i64]) -> Option<usize> {
        let s = match &self.repr {
            Repr::Empty => None,
            Repr::Diagonal { lo, slots } => diagonal_slot(p, *lo, slots),
            Repr::Dense(grid) => grid.slot(p),
            Repr::Hashed(map) => map.get(p).copied(),
        };
        s.map(|s| s as usize)
    }

    #[inline]
    pub fn contains(&self, p: &[i64]) -> bool {
        self.lookup(p).is_some()
    }
}

/// Tracks which targets a walk has visited so far.
#[derive(Clone, Debug)]
pub struct CoverTracker<'a> {
    index: &'a SiteIndex,
    covered: Vec<bool>,
    remaining: usize,
    completed_at: Option<u64>,
}

impl<'a> CoverTracker<'a> {
    pub fn new(index: &'a SiteIndex) -> Self {
        let remaining = index.len();
        CoverTracker {
            index,
            covered: vec![false; remaining],
            remaining,
            completed_at: (remaining == 0).then_some(0),
        }
    }

    /// Records a visit at `step`; returns true once every target is covered.
    #[inline]
    pub fn visit(&mut self, p: &[i64], step: u64) -> bool {
        if let Some(s) = self.index.lookup(p) {
            if !self.covered[s] {
                self.covered[s] = true;
                self.remaining -= 1;
                if self.remaining == 0 {
                    self.completed_at = Some(step);
                }
            }
        }
        self.remaining == 0
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn completed_at(&self) -> Option<u64> {
        self.completed_at
    }

    pub fn remaining_set(&self) -> PointSet {
        let mut set = PointSet::empty(self.index.dim());
        for (s, &c) in self.covered.iter().enumerate() {
            if !c {
                set.insert(self.index.member(s).clone()).expect("same dimension");
            }
        }
        set
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Materializes `steps` steps of the walk seeded by stream 0 of `seed`.
pub fn sample_trajectory(d: usize, steps: u64, seed: u64, start: LatticePoint) -> Result<NNPath> {
    check_dim(d, start.dim())?;
    let mut walk = WalkStream::new(start, StreamSeed::child(seed, 0));
    let mut points = Vec::with_capacity(steps as usize + 1);
    points.push(walk.position().clone());
    for _ in 0..steps {
        walk.advance();
        points.push(walk.position().clone());
    }
    Ok(NNPath::from_trusted(points))
}

/// Smallest `n >= 0` with `path[n]` in `target`.
pub fn hit_time(path: &NNPath, target: &PointSet) -> Result<Option<u64>> {
    check_dim(target.dim(), path.dim())?;
    Ok(path.points().iter().position(|p| target.contains(p)).map(|n| n as u64))
}

/// Smallest `n >= 1` with `path[n]` in `target`.
pub fn first_return_time(path: &NNPath, target: &PointSet) -> Result<Option<u64>> {
    check_dim(target.dim(), path.dim())?;
    Ok(path
        .points()
        .iter()
        .skip(1)
        .position(|p| target.contains(p))
        .map(|n| n as u64 + 1))
}

/// Advances `stream` up to `horizon` steps and returns the step (counted
/// from the call, current position = step 0) at which every point of
/// `target` has been visited.
pub fn cover_completion(stream: &mut WalkStream, target: &PointSet, horizon: u64) -> Result<Option<u64>> {
    check_dim(target.dim(), stream.dim())?;
    let index = SiteIndex::new(target);
    Ok(cover_with_index(stream, &index, horizon))
}

pub(crate) fn cover_with_index(stream: &mut WalkStream, index: &SiteIndex, horizon: u64) -> Option<u64> {
    let mut tracker = CoverTracker::new(index);
    if tracker.visit(stream.position().coords(), 0) {
        return tracker.completed_at();
    }
    stream.walk_until(horizon, |t, p| tracker.visit(p, t))
}

/// `(x^1 - x^2, x^2 - x^3, ..., x^{d-1} - x^d)` at every index. Consecutive
/// entries are not nearest neighbours, so the result is a plain sequence.
pub fn difference_walk(path: &NNPath) -> Result<Vec<LatticePoint>> {
    if path.dim() < 2 {
        return Err(invalid(format!("difference walk needs d >= 2, got {}", path.dim())));
    }
    Ok(path
        .points()
        .iter()
        .map(|p| LatticePoint::new(p.coords().windows(2).map(|w| w[0] - w[1]).collect()))
        .collect())
}

/// The common coordinate `m` at every index where the path sits on the
/// diagonal `(m, m, m)`, in order. This is the diagonal-return sequence of
/// the walk measured in units of the diagonal (coordinate sum / 3).
pub fn z_walk(path: &NNPath) -> Result<Vec<i64>> {
    check_dim(3, path.dim())?;
    if !path.start().is_diagonal() {
        return Err(invalid(format!("z walk must start on the diagonal, got {:?}", path.start())));
    }
    Ok(path
        .points()
        .iter()
        .filter(|p| p.is_diagonal())
        .map(|p| p.coords()[0])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::validate_nn_path;
    use proptest::prelude::*;

    fn p<const D: usize>(a: [i64; D]) -> LatticePoint {
        a.into()
    }

    fn path(points: Vec<LatticePoint>) -> NNPath {
        validate_nn_path(points).unwrap()
    }

    fn set(points: Vec<LatticePoint>) -> PointSet {
        PointSet::from_points(points).unwrap()
    }

    #[test]
    fn trajectory_basics() {
        let t = sample_trajectory(3, 0, 9, p([1, 2, 3])).unwrap();
        assert_eq!(t.points(), &[p([1, 2, 3])]);
        let t = sample_trajectory(3, 1000, 9, LatticePoint::origin(3)).unwrap();
        assert_eq!(t.len(), 1001);
        assert!(validate_nn_path(t.clone().into_points()).is_ok());
        assert_eq!(t, sample_trajectory(3, 1000, 9, LatticePoint::origin(3)).unwrap());
        assert_ne!(t, sample_trajectory(3, 1000, 10, LatticePoint::origin(3)).unwrap());
        assert!(sample_trajectory(2, 5, 0, LatticePoint::origin(3)).is_err());
    }

    #[test]
    fn step_distribution_is_uniform() {
        for d in [1usize, 2, 3, 4, 5] {
            let mut w = WalkStream::new(LatticePoint::origin(d), StreamSeed::child(17, d as u64));
            let n = 1_000_000u64;
            let mut counts = vec![0u64; 2 * d];
            for _ in 0..n {
                counts[w.advance()] += 1;
            }
            let expect = n as f64 / (2 * d) as f64;
            let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
            // 99.9% quantile of chi-square with 9 degrees of freedom is 27.9
            assert!(chi2 < 27.9, "d={d} chi2={chi2} {counts:?}");
            for &c in &counts {
                assert!((c as f64 / n as f64 - 1.0 / (2 * d) as f64).abs() < 0.005);
            }
        }
    }

    #[test]
    fn direction_encoding() {
        let mut w = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(3, 0));
        for _ in 0..100 {
            let before = w.position().clone();
            let u = w.advance();
            let mut expect = before.coords().to_vec();
            expect[u / 2] += if u % 2 == 0 { 1 } else { -1 };
            assert_eq!(w.position().coords(), &expect[..]);
        }
        assert_eq!(w.steps(), 100);
    }

    #[test]
    fn walk_until_matches_advance() {
        for d in 1..=6 {
            let seed = StreamSeed::child(17, d as u64);
            let mut a = WalkStream::new(LatticePoint::origin(d), seed);
            let mut b = WalkStream::new(LatticePoint::origin(d), seed);
            let mut seen = Vec::new();
            let stopped = b.walk_until(500, |t, p| {
                seen.push((t, p.to_vec()));
                t == 321
            });
            assert_eq!(stopped, Some(321));
            for (t, p) in &seen {
                a.advance();
                assert_eq!(a.steps(), *t);
                assert_eq!(a.position().coords(), &p[..]);
            }
            assert_eq!(b.steps(), 321);
            assert_eq!(b.position(), a.position());
            // the streams stay in lockstep afterwards
            assert_eq!(b.walk_until(50, |_, _| false), None);
            for _ in 0..50 {
                a.advance();
            }
            assert_eq!(b.position(), a.position());
        }
    }

    #[test]
    fn streams_are_independent_of_sibling_use() {
        // Stream 5 must not depend on whether stream 4 was consumed first.
        let mut a = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(1, 4));
        for _ in 0..10_000 {
            a.advance();
        }
        let mut b = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(1, 5));
        let mut c = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(1, 5));
        for _ in 0..1000 {
            assert_eq!(b.advance(), c.advance());
        }
    }

    #[test]
    fn hit_time_examples() {
        let pth = path(vec![p([0, 0, 0]), p([1, 0, 0]), p([1, 1, 0])]);
        assert_eq!(hit_time(&pth, &set(vec![p([0, 0, 0])])).unwrap(), Some(0));
        assert_eq!(hit_time(&pth, &PointSet::empty(3)).unwrap(), None);
        assert_eq!(hit_time(&pth, &set(vec![p([1, 1, 0])])).unwrap(), Some(2));
        assert!(hit_time(&pth, &PointSet::empty(2)).is_err());
    }

    #[test]
    fn first_return_examples() {
        let pth = path(vec![p([0, 0, 0]), p([1, 0, 0]), p([0, 0, 0])]);
        assert_eq!(first_return_time(&pth, &set(vec![p([0, 0, 0])])).unwrap(), Some(2));
        let away = path(vec![p([0, 0, 0]), p([1, 0, 0]), p([2, 0, 0])]);
        assert_eq!(first_return_time(&away, &set(vec![p([0, 0, 0])])).unwrap(), None);
    }

    #[test]
    fn cover_completion_examples() {
        let start = p([2, -1, 0]);
        let mut w = WalkStream::new(start.clone(), StreamSeed::child(0, 0));
        assert_eq!(cover_completion(&mut w, &set(vec![start.clone()]), 10).unwrap(), Some(0));
        let mut w = WalkStream::new(start.clone(), StreamSeed::child(0, 0));
        let far = set(vec![start.clone(), p([2 + 11, -1, 0])]);
        assert_eq!(cover_completion(&mut w, &far, 10).unwrap(), None);
        assert_eq!(w.steps(), 10);
        let mut w = WalkStream::new(start, StreamSeed::child(0, 0));
        assert_eq!(cover_completion(&mut w, &PointSet::empty(3), 10).unwrap(), Some(0));
    }

    #[test]
    fn cover_streaming_matches_materialized() {
        let origin = LatticePoint::origin(3);
        for seed in 0..200u64 {
            let target = set(vec![p([(seed % 5) as i64, 1, -1])]);
            let traj = sample_trajectory(3, 2000, seed, origin.clone()).unwrap();
            let mut w = WalkStream::new(origin.clone(), StreamSeed::child(seed, 0));
            assert_eq!(cover_completion(&mut w, &target, 2000).unwrap(), hit_time(&traj, &target).unwrap());
        }
    }

    #[test]
    fn cover_tracker_remaining() {
        let target = set(vec![p([0, 0, 0]), p([1, 0, 0]), p([5, 5, 5])]);
        let index = SiteIndex::new(&target);
        let mut t = CoverTracker::new(&index);
        assert!(!t.visit(&[0, 0, 0], 0));
        assert!(!t.visit(&[0, 0, 0], 1));
        assert!(!t.visit(&[1, 0, 0], 2));
        assert_eq!(t.remaining(), 1);
        assert_eq!(t.remaining_set(), set(vec![p([5, 5, 5])]));
        assert!(t.visit(&[5, 5, 5], 3));
        assert_eq!(t.completed_at(), Some(3));
    }

    #[test]
    fn site_index_representations_agree() {
        // diagonal, dense and hashed layouts must answer identically
        let diag = set((0..50).map(|m| LatticePoint::diagonal(3, m * m)).collect());
        let boxy = set(vec![p([0, 0, 0]), p([3, -2, 1]), p([7, 7, -7])]);
        let spread = set(vec![p([0, 0, 0]), p([1 << 30, 0, 0]), p([0, -(1 << 30), 5])]);
        for s in [&diag, &boxy, &spread] {
            let index = SiteIndex::new(s);
            for q in s.iter() {
                assert!(index.contains(q.coords()));
                assert_eq!(index.member(index.lookup(q.coords()).unwrap()), q);
            }
            for q in [p([1, 0, 0]), p([4, 4, 5]), p([-1, -1, -1]), p([1 << 30, 0, 1])] {
                assert_eq!(index.contains(q.coords()), s.contains(&q));
            }
        }
        assert!(matches!(SiteIndex::new(&diag).repr, Repr::Diagonal { .. }));
        assert!(matches!(SiteIndex::new(&boxy).repr, Repr::Dense(_)));
        assert!(matches!(SiteIndex::new(&spread).repr, Repr::Hashed(_)));
    }

    #[test]
    fn first_visit_matches_first_return() {
        let target = set(vec![p([0, 0, 0]), p([2, 2, 2])]);
        let index = SiteIndex::new(&target);
        for seed in 0..100u64 {
            let traj = sample_trajectory(3, 500, seed, LatticePoint::origin(3)).unwrap();
            let mut w = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(seed, 0));
            assert_eq!(w.first_visit(&index, 500), first_return_time(&traj, &target).unwrap());
        }
    }

    #[test]
    fn difference_walk_examples() {
        let a = path(vec![p([0, 0, 0]), p([1, 0, 0])]);
        assert_eq!(difference_walk(&a).unwrap(), vec![p([0, 0]), p([1, 0])]);
        let b = path(vec![p([0, 0, 0]), p([0, 0, 1])]);
        assert_eq!(difference_walk(&b).unwrap(), vec![p([0, 0]), p([0, -1])]);
        let c = path(vec![p([3, 3, 3]), p([3, 3, 4])]);
        assert_eq!(difference_walk(&c).unwrap()[0], p([0, 0]));
        assert!(difference_walk(&path(vec![p([0]), p([1])])).is_err());
    }

    #[test]
    fn difference_walk_step_set() {
        // Exhaustive over the 2d step types: ±e_i changes the difference by
        // ±(e_i - e_{i-1}) with the boundary terms dropped.
        for d in 2..=6usize {
            let origin = LatticePoint::origin(d);
            for u in 0..2 * d {
                let mut q = origin.clone();
                q.coords_mut()[u / 2] += if u % 2 == 0 { 1 } else { -1 };
                let diff = difference_walk(&path(vec![origin.clone(), q])).unwrap();
                let step = diff[1].coords();
                let nonzero: Vec<_> = step.iter().filter(|&&c| c != 0).collect();
                assert!(!nonzero.is_empty() && nonzero.len() <= 2);
                assert!(nonzero.iter().all(|&&c| c.abs() == 1));
                if nonzero.len() == 2 {
                    assert_eq!(nonzero[0] + nonzero[1], 0);
                }
            }
        }
    }

    #[test]
    fn z_walk_examples() {
        let a = path(vec![p([0, 0, 0]), p([1, 0, 0]), p([1, 1, 0]), p([1, 1, 1])]);
        assert_eq!(z_walk(&a).unwrap(), vec![0, 1]);
        let b = path(vec![p([0, 0, 0]), p([1, 0, 0]), p([2, 0, 0])]);
        assert_eq!(z_walk(&b).unwrap(), vec![0]);
        let off = path(vec![p([1, 0, 0]), p([1, 1, 0])]);
        assert!(z_walk(&off).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parity(seed in any::<u64>(), d in 1usize..6, n in 0u64..3000) {
            let start = LatticePoint::new((0..d as i64).collect());
            let t = sample_trajectory(d, n, seed, start.clone()).unwrap();
            prop_assert_eq!(t.end().l1_dist(&start) % 2, n % 2);
        }

        #[test]
        fn z_walk_matches_diagonal_trace(seed in any::<u64>()) {
            let t = sample_trajectory(3, 5000, seed, LatticePoint::origin(3)).unwrap();
            let z = z_walk(&t).unwrap();
            prop_assert_eq!(z[0], 0);
            let from_z: std::collections::BTreeSet<i64> = z.iter().copied().collect();
            let from_trace: std::collections::BTreeSet<i64> =
                t.points().iter().filter(|q| q.is_diagonal()).map(|q| q.coords()[0]).collect();
            prop_assert_eq!(from_z, from_trace);
            let diffs = difference_walk(&t).unwrap();
            let zeros = diffs.iter().filter(|q| q.coords().iter().all(|&c| c == 0)).count();
            prop_assert_eq!(zeros, z.len());
        }

        #[test]
        fn cover_monotone_in_horizon(seed in any::<u64>(), h in 0u64..4000) {
            let target = crate::lattice::diagonal_points(3, 1).unwrap();
            let run = |horizon| {
                let mut w = WalkStream::new(LatticePoint::origin(3), StreamSeed::child(seed, 0));
                cover_completion(&mut w, &target, horizon).unwrap()
            };
            if let Some(t) = run(h) {
                prop_assert!(t <= h);
                prop_assert_eq!(run(t), Some(t));
                prop_assert_eq!(run(h + 1000), Some(t));
            }
        }
    }
}
