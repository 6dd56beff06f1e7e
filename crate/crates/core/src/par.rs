//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature these fan out over the rayon global pool;
//! without it they run the same closures sequentially. Results are always
//! collected in index order, and reductions are left to the caller so that
//! floating-point sums happen in a fixed order either way.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
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

/// Maps `f` over `0..n`, preserving order.
pub fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Splits `0..n` into consecutive chunks of `chunk` indices and maps `f`
/// over each chunk. The chunk layout depends only on `n` and `chunk`, so
/// per-chunk partial results are identical with or without threads.
pub fn map_chunks<R, F>(n: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, Range<usize>) -> R + Sync + Send,
{
    assert!(chunk > 0, "chunk size must be positive");
    let chunks = n.div_ceil(chunk);
    map_indices(chunks, |c| {
        let start = c * chunk;
        f(c, start..(start + chunk).min(n))
    })
}

/// True when the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
