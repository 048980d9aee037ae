//! Data-parallel helpers. With the `parallel` feature disabled every helper
//! runs sequentially and `Execution::Parallel` degrades to `Sequential`.

use serde::{Deserialize, Serialize};

/// How independent work items (Monte-Carlo trials) are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given worker count; 0 uses the global pool.
    #[default]
    Parallel,
    Threads(usize),
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n > 1 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Maps `f` over `0..n` under the requested execution policy.
pub fn run_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => map_range(n, f),
        #[cfg(feature = "parallel")]
        Execution::Threads(threads) => {
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| map_range(n, f)),
                Err(_) => map_range(n, f),
            }
        }
        #[cfg(not(feature = "parallel"))]
        _ => (0..n).map(f).collect(),
    }
}
