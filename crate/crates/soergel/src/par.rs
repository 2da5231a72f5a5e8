//! Data-parallel helpers.
//!
//! Hot loops in the crate (batched hom-space solves, per-generator centrality
//! checks, exhaustive bar audits) are embarrassingly parallel. With the
//! default `parallel` feature they fan out over rayon; without it the same
//! entry points run sequentially, which keeps the engine usable in contexts
//! where a thread pool is unwanted. `map_sequential` is always available so
//! benchmarks can compare both paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over items, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Map over items, in parallel when the `parallel` feature is enabled.
#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential map, regardless of features. Benchmarks use this as the
/// baseline against [`map`].
pub fn map_sequential<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
