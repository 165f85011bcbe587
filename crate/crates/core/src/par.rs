//! Order-preserving parallel map with an explicit degree of parallelism.

use rayon::prelude::*;

/// Applies `f` to every item on `jobs` threads; `jobs <= 1` runs inline.
/// The output order always matches the input order.
pub fn map<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().map(f).collect())
}
