//! Bounded worker pool with index-ordered results.

use rayon::prelude::*;

/// Resolves a worker count: explicit value, then `MORPHO_WORKERS`, then the
/// available hardware parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .filter(|&w| w > 0)
        .or_else(|| {
            std::env::var("MORPHO_WORKERS")
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .filter(|&w: &usize| w > 0)
        })
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Maps `f` over `items` on `workers` threads. Output order always matches
/// input order.
pub fn ordered_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction");
    pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
}
