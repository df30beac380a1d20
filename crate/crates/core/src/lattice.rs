//! Points, nearest-neighbor paths and finite site sets of `Z^d`.
//!
//! Coordinates are `i64`. Every experiment in this crate keeps coordinates
//! below `2^40` in absolute value, so sums and squared norms never overflow.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A site of `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    /// Panics if `coords` is empty.
    pub fn new(coords: Vec<i64>) -> Self {
        assert!(!coords.is_empty(), "lattice point needs at least one coordinate");
        LatticePoint(coords)
    }

    pub fn origin(d: usize) -> Self {
        Self::new(vec![0; d])
    }

    /// `(m, m, ..., m)` in dimension `d`.
    pub fn diagonal(d: usize, m: i64) -> Self {
        Self::new(vec![m; d])
    }

    /// The unit vector `e_i`, with `axis` counted from zero.
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut c = vec![0; d];
        c[axis] = 1;
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [i64] {
        &mut self.0
    }

    pub fn l1_norm(&self) -> u64 {
        l1_norm(self)
    }

    /// L1 distance; panics on dimension mismatch.
    pub fn l1_dist(&self, other: &LatticePoint) -> u64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.abs_diff(*b))
            .sum()
    }

    /// Squared Euclidean norm, exact.
    pub fn l2_norm_sq(&self) -> i128 {
        self.0.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.0.iter().all(|&c| c == self.0[0])
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for LatticePoint {
    /// Space-separated coordinates, the line format of path and set dumps.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        Self::new(v)
    }
}

impl<const D: usize> From<[i64; D]> for LatticePoint {
    fn from(a: [i64; D]) -> Self {
        Self::new(a.to_vec())
    }
}

pub fn l1_norm(p: &LatticePoint) -> u64 {
    p.0.iter().map(|c| c.unsigned_abs()).sum()
}

/// A non-empty sequence of points with unit L1 increments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NNPath {
    points: Vec<LatticePoint>,
}

impl NNPath {
    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn start(&self) -> &LatticePoint {
        &self.points[0]
    }

    pub fn end(&self) -> &LatticePoint {
        self.points.last().expect("path is non-empty")
    }

    pub fn trace(&self) -> PointSet {
        PointSet::from_points(self.points.iter().cloned()).expect("path points share a dimension")
    }

    pub fn into_points(self) -> Vec<LatticePoint> {
        self.points
    }

    /// Builds a path without validation; callers guarantee unit steps.
    pub(crate) fn from_trusted(points: Vec<LatticePoint>) -> Self {
        debug_assert!(validate_nn_path(points.clone()).is_ok());
        NNPath { points }
    }

    pub fn write_text<W: Write>(&self, w: W) -> io::Result<()> {
        write_points(w, self.points.iter())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        validate_nn_path(read_points(r)?)
    }
}

/// Checks dimensions and unit steps. The error names the first offending index.
pub fn validate_nn_path(points: Vec<LatticePoint>) -> Result<NNPath> {
    let first = points.first().ok_or(Error::EmptyPath)?;
    let d = first.dim();
    for (i, p) in points.iter().enumerate().skip(1) {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.dim(),
            });
        }
        if points[i - 1].l1_dist(p) != 1 {
            return Err(Error::NonUnitStep { index: i });
        }
    }
    Ok(NNPath { points })
}

/// The monotone staircase from the origin to the L1 sphere of radius `n`:
/// unit steps cycle through `e_1, e_2, ..., e_d`, so the path stays within
/// distance one of the diagonal and has `n + 1` points.
pub fn staircase_path(d: usize, n: u64) -> Result<NNPath> {
    if d < 2 {
        return Err(invalid(format!("staircase path needs d >= 2, got {d}")));
    }
    if n < 1 {
        return Err(invalid("staircase path needs N >= 1"));
    }
    let mut cur = LatticePoint::origin(d);
    let mut points = Vec::with_capacity(n as usize + 1);
    points.push(cur.clone());
    for step in 0..n as usize {
        cur.coords_mut()[step % d] += 1;
        points.push(cur.clone());
    }
    Ok(NNPath::from_trusted(points))
}

/// `(0, e_1, 2e_1, ..., n e_1)`.
pub fn axis_path(d: usize, n: u64) -> Result<NNPath> {
    if d < 1 || n < 1 {
        return Err(invalid(format!("axis path needs d >= 1 and N >= 1, got d={d}, N={n}")));
    }
    let points = (0..=n as i64)
        .map(|m| {
            let mut c = vec![0; d];
            c[0] = m;
            LatticePoint::new(c)
        })
        .collect();
    Ok(NNPath::from_trusted(points))
}

/// `{(m, ..., m) : 0 <= m <= max}`.
pub fn diagonal_points(d: usize, max: u64) -> Result<PointSet> {
    if d < 2 {
        return Err(invalid(format!("diagonal needs d >= 2, got {d}")));
    }
    PointSet::from_points((0..=max as i64).map(|m| LatticePoint::diagonal(d, m)))
}

/// A finite set of sites of one dimension.
///
/// An empty set carries its dimension explicitly so that it can still be
/// checked against a walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    dim: usize,
    members: HashSet<LatticePoint>,
}

impl PointSet {
    pub fn empty(dim: usize) -> Self {
        PointSet {
            dim,
            members: HashSet::new(),
        }
    }

    /// Fails on an empty iterator (no dimension) or mixed dimensions.
    pub fn from_points<I: IntoIterator<Item = LatticePoint>>(points: I) -> Result<Self> {
        let mut it = points.into_iter().peekable();
        let dim = it.peek().map(|p| p.dim()).ok_or_else(|| invalid("point set needs a dimension; use PointSet::empty"))?;
        let mut set = PointSet::empty(dim);
        for p in it {
            set.insert(p)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, p: LatticePoint) -> Result<bool> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.dim(),
            });
        }
        Ok(self.members.insert(p))
    }

    pub fn remove(&mut self, p: &LatticePoint) -> bool {
        self.members.remove(p)
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.members.contains(p)
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

    pub fn iter(&self) -> impl Iterator<Item = &LatticePoint> {
        self.members.iter()
    }

    /// Members in lexicographic order; used wherever output must be reproducible.
    pub fn sorted(&self) -> Vec<LatticePoint> {
        let mut v: Vec<_> = self.members.iter().cloned().collect();
        v.sort();
        v
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = self.clone();
        out.members.extend(other.members.iter().cloned());
        Ok(out)
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn write_text<W: Write>(&self, w: W) -> io::Result<()> {
        write_points(w, self.sorted().iter())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        PointSet::from_points(read_points(r)?)
    }
}

fn write_points<'a, W: Write>(mut w: W, points: impl Iterator<Item = &'a LatticePoint>) -> io::Result<()> {
    for p in points {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

fn read_points<R: BufRead>(r: R) -> Result<Vec<LatticePoint>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let coords = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        out.push(LatticePoint::new(coords));
    }
    Ok(out)
}
