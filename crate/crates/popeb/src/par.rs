//! Data-parallel map with a sequential fallback.
//!
//! Everything data-parallel in this crate funnels through [`map_indexed`]:
//! per-observation responsibilities, per-document local passes, and
//! per-candidate fits and scores. The map produces a `Vec` ordered by index
//! and all reductions happen sequentially over that order, so results are
//! bit-identical whether the `parallel` feature is on, off, or running on
//! any number of threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every index in `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Applies `f` to every index in `0..n`, returning results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}
