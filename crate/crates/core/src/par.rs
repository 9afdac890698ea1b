//! Thin wrappers over rayon that fall back to plain iterators when the
//! `parallel` feature is disabled.
//!
//! Float reductions never go through `fold_range`: callers collect per-item
//! values with `map_*` and sum them in order, so results do not depend on
//! the thread count.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_range<R, F>(range: Range<u64>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<R, F>(range: Range<u64>, f: F) -> Vec<R>
where
    F: Fn(u64) -> R,
{
    range.map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Order-insensitive reduction over `range` with one accumulator per worker.
#[cfg(feature = "parallel")]
pub(crate) fn fold_range<A, I, F, M>(range: Range<u64>, identity: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, u64) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    range
        .into_par_iter()
        .fold(&identity, &fold)
        .reduce(&identity, &merge)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn fold_range<A, I, F, M>(range: Range<u64>, identity: I, fold: F, _merge: M) -> A
where
    I: Fn() -> A,
    F: Fn(A, u64) -> A,
    M: Fn(A, A) -> A,
{
    range.fold(identity(), fold)
}

/// Runs `f` over disjoint mutable chunks of `data`.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}
