//! Deterministic parallel reductions.
//!
//! Work is cut into a fixed number of contiguous chunks regardless of the
//! thread count, and partial results are combined in chunk order, so sums
//! are bit-identical whether one thread or many do the work.

use std::ops::Range;

use rayon::prelude::*;

const CHUNKS: usize = 32;

/// Applies `f` to each chunk of `0..n` and returns the results in order.
pub(crate) fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let size = n.div_ceil(CHUNKS).max(1);
    let ranges: Vec<Range<usize>> =
        (0..n).step_by(size).map(|start| start..(start + size).min(n)).collect();
    ranges.into_par_iter().map(|r| f(r)).collect()
}

/// Sum of per-chunk vectors of length `len`.
pub(crate) fn sum_chunks<F>(n: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    let parts = map_chunks(n, |range| {
        let mut acc = vec![0.0; len];
        f(range, &mut acc);
        acc
    });
    let mut total = vec![0.0; len];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Scalar sum over chunks.
pub(crate) fn sum_scalar<F>(n: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync,
{
    map_chunks(n, f).into_iter().fold(0.0, |a, b| a + b)
}
