//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these run on the rayon pool; without it they
//! are plain loops. Results are always collected in index order and sums are
//! reduced serially over fixed-size chunks, so output does not depend on the
//! number of threads.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for per-observation reductions.
pub const CHUNK: usize = 256;

pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
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

pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
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

/// Sums `f` over `0..n` split into [`CHUNK`]-sized ranges.
pub fn chunked_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map_range(chunks, |c| f(c * CHUNK..((c + 1) * CHUNK).min(n)));
    partial.into_iter().sum()
}

/// Number of worker threads the helpers above will use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_serial() {
        let n = 1000;
        let s = chunked_sum(n, |r| r.map(|i| i as f64).sum());
        assert_eq!(s, (n * (n - 1) / 2) as f64);
        assert_eq!(chunked_sum(0, |_| 1.0), 0.0);
    }

    #[test]
    fn map_preserves_order() {
        let v = map_range(50, |i| i * 2);
        assert_eq!(v, (0..50).map(|i| i * 2).collect::<Vec<_>>());
    }
}
