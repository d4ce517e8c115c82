//! Execution policy for embarrassingly parallel loops.
//!
//! Every parallel loop in the crate goes through [`map_indexed`] /
//! [`try_map_indexed`]: work item `i` is a pure function of `i`, results are
//! collected in index order and reduced sequentially by the caller. Output is
//! therefore identical for any thread count and for either policy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    /// Rayon's global pool. Without the `parallel` feature this silently runs
    /// sequentially.
    #[default]
    Parallel,
}

impl ExecPolicy {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

/// Sizes rayon's global pool. Only the first call takes effect; later calls
/// and builds without the `parallel` feature are no-ops returning `false`.
pub fn configure_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

pub fn map_indexed<T, F>(n: usize, policy: ExecPolicy, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = policy;
    (0..n).map(f).collect()
}

pub fn try_map_indexed<T, E, F>(n: usize, policy: ExecPolicy, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    // Collect everything first so the reported error is the lowest failing
    // index regardless of scheduling.
    let results = map_indexed(n, policy, f);
    results.into_iter().collect()
}
