//! Batch execution helpers.
//!
//! Independent work items (trajectory sweeps, Monte-Carlo sampling, batch
//! scenarios) go through [`map_slice`], which fans out over rayon when the
//! `parallel` feature is enabled and otherwise falls back to the sequential
//! path. Output order always matches input order, so results are identical
//! either way; [`map_slice_seq`] stays available unconditionally for
//! comparison benchmarks.

/// Maps `f` over `items`, in parallel when built with the `parallel`
/// feature. Results keep input order.
#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items`, in parallel when built with the `parallel`
/// feature. Results keep input order.
#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    map_slice_seq(items, f)
}

/// Sequential reference path for [`map_slice`].
pub fn map_slice_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
