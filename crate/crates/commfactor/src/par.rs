//! Data-parallel helpers with a sequential fallback.
//!
//! Per-sample work on matrix paths (eigendecompositions, kernel evaluation,
//! quadrature segments) is independent; with the `parallel` feature the maps
//! below fan out over rayon, otherwise they run in order. Both produce the
//! same output in the same order, so results are deterministic either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Index-order-preserving map over `0..n`.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Fallible order-preserving map over `0..n`; the first error (by index) wins.
pub(crate) fn try_map_indices<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let results: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
