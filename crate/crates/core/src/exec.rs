//! Execution primitives for the data-parallel inner loops.
//!
//! Every hot loop in the crate (frequency-grid evaluation, locus sampling,
//! trajectory batches, rate scans) funnels through [`map_slice`], which runs
//! on rayon when the `parallel` feature is enabled and degrades to a plain
//! sequential map otherwise. Both variants preserve input order, so callers
//! see identical results either way; reductions over the output (min margins,
//! winding sums) are performed sequentially afterwards to stay deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map over a slice, parallel when the `parallel` feature is on.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential counterpart of [`map_slice`], kept available unconditionally so
/// benchmarks can compare the two paths on the same build.
pub fn map_slice_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
