//! Monte Carlo laboratory for cover and return probabilities of simple random
//! walk on `Z^d`, centred on a sparse transient subset of the diagonal of `Z^3`.
//!
//! - [`lattice`]: points, nearest-neighbour paths, the staircase path, site sets.
//! - [`sparse`]: the sequence `n_k`, its counting function `C_N`, dyadic
//!   slices, and the comparison set whose return probabilities tend to one.
//! - [`quadrature`]: `∫ (ln x)^{1+eps}` and the tail sums built from it.
//! - [`walker`]: streaming walks, hit/return/cover detection, difference and Z walks.
//! - [`estimator`]: reproducible parallel estimators with Wilson intervals.

pub mod error;
pub mod estimator;
pub mod lattice;
pub mod quadrature;
pub mod sparse;
pub mod walker;

pub use error::{Error, Result};
pub use lattice::{LatticePoint, NNPath, PointSet};
