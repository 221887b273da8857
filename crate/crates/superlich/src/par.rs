//! Data-parallel driver with a sequential fallback. The `parallel` feature
//! gates the rayon dependency; the runtime flag selects the mode so both
//! paths can be compared in one binary (see the bench suite).

/// Map `f` over the index range and fold the results with `max`. All of the
/// suite's reductions are max-based, which keeps results independent of
/// evaluation order.
pub fn map_max(count: usize, parallel: bool, f: impl Fn(usize) -> f64 + Send + Sync) -> f64 {
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return (0..count)
                .into_par_iter()
                .map(f)
                .reduce(|| f64::NEG_INFINITY, f64::max);
        }
    }
    let _ = parallel;
    (0..count).map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Map `f` over the index range, collecting results in index order.
pub fn map_collect<T: Send>(
    count: usize,
    parallel: bool,
    f: impl Fn(usize) -> T + Send + Sync,
) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return (0..count).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..count).map(f).collect()
}
