//! Worker-count handling. All parallel code in this crate writes disjoint
//! per-item slots, so output never depends on the number of workers.

use rayon::ThreadPoolBuilder;

use crate::error::{Result, ScanError};

/// Default worker count: available hardware parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Run `f` on a pool with exactly `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(ScanError::invalid("workers must be at least 1"));
    }
    if workers == rayon::current_num_threads() {
        return Ok(f());
    }
    let pool = ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ScanError::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
