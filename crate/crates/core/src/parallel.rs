//! Deterministic fan-out of Monte Carlo replicates.
//!
//! Replicate `i` always reads noise sub-stream `i`, and results are collected
//! in replicate order, so outputs do not depend on the worker count.

use crate::error::{Result, RqfError};
use rayon::prelude::*;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "RQF_THREADS";

/// Evaluates `f(i)` for `i in 0..count` in parallel, preserving order.
pub fn map_replicates<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Runs `f` on a pool with `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| RqfError::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|n| *n > 0)
}
