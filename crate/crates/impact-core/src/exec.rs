//! Execution strategy for the data-parallel inner loops.
//!
//! Every parallel map in this crate produces a `Vec` whose element order
//! matches the input order, and all floating-point reductions over those
//! vectors happen sequentially afterwards. Results are therefore
//! bit-identical whether a loop runs on rayon or on one thread.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a driver function should run its per-item work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Auto,
    /// Always sequential, regardless of features.
    Sequential,
}

/// Map `f` over `items`, preserving input order in the output.
pub fn map_vec<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        Exec::Sequential => items.iter().map(f).collect(),
        Exec::Auto => {
            #[cfg(feature = "parallel")]
            {
                items.par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.iter().map(f).collect()
            }
        }
    }
}

/// Map `f` over an index range, preserving order.
pub fn map_range<U, F>(exec: Exec, range: std::ops::Range<usize>, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match exec {
        Exec::Sequential => range.map(f).collect(),
        Exec::Auto => {
            #[cfg(feature = "parallel")]
            {
                range.into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                range.map(f).collect()
            }
        }
    }
}
