//! Data-parallel map with a sequential fallback.
//!
//! With the default `parallel` feature the sweeps (support layers, subsystem
//! enumeration, trial batches) fan out over rayon; without it the same code
//! runs on plain iterators. Results preserve input order either way, so
//! outputs are deterministic regardless of schedule.

#[cfg(feature = "parallel")]
pub(crate) fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
