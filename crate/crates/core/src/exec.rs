//! Execution strategy for the data-parallel loops (sampling, grid sweeps,
//! replication studies).
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it, or when [`Execution::Sequential`] is requested, the same
//! closures run in order on the calling thread. Outputs are identical either
//! way because every work item is keyed by its index.

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Execution {
    /// True when this strategy actually uses worker threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indices<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Counts the items satisfying `pred`.
pub fn count_where<T, F>(exec: Execution, items: &[T], pred: F) -> usize
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().with_min_len(4096).filter(|t| pred(t)).count();
    }
    let _ = exec;
    items.iter().filter(|t| pred(t)).count()
}

/// Caps the global worker pool. Returns false if the pool was already
/// initialised or the crate was built without the `parallel` feature.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_indices(Execution::Sequential, 1000, f);
        let b = map_indices(Execution::Parallel, 1000, f);
        assert_eq!(a, b);
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(
            count_where(Execution::Sequential, &xs, |x| *x > 2500.0),
            count_where(Execution::Parallel, &xs, |x| *x > 2500.0)
        );
    }
}
