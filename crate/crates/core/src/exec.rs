//! Chunked sample evaluation, either sequential or on the rayon pool.
//!
//! Samples `0..n` are cut into fixed-size chunks. Each chunk is evaluated
//! independently and the per-chunk partials are returned in chunk order, so
//! any reduction done by the caller sees the same sequence regardless of
//! worker count or scheduling.

use serde::{Deserialize, Serialize};

/// Samples per work item.
pub const CHUNK: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Runs on the current rayon pool. Without the `parallel` feature this
    /// is identical to `Sequential`.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

fn chunk_bounds(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n)))
        .collect()
}

/// Evaluates `f(start, end)` over every chunk of `0..n`, returning partials in chunk order.
pub fn map_chunks<T, F>(exec: Execution, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let bounds = chunk_bounds(n);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            bounds.into_par_iter().map(|(s, e)| f(s, e)).collect()
        }
        _ => bounds.into_iter().map(|(s, e)| f(s, e)).collect(),
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_items<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(usize, &I) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
        }
        _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}
