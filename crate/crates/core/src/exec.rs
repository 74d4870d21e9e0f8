#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for the data-parallel loops of the crate.
///
/// Results never depend on the choice: parallel reductions either use
/// integer arithmetic or collect per-item results in input order before
/// summing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon's current thread pool. Falls back to [`Exec::Sequential`] when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Exec {
    /// True when this strategy will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub(crate) fn map_range<R, F>(n: usize, exec: Exec, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, returning results in input order.
pub(crate) fn map_slice<'a, T, R, F>(items: &'a [T], exec: Exec, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&'a T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Folds `0..n` into per-worker accumulators and merges them.
///
/// `merge` must be associative and commutative for the result to be
/// independent of scheduling.
pub(crate) fn fold_range<A, Init, Fold, Merge>(n: usize, exec: Exec, init: Init, fold: Fold, merge: Merge) -> A
where
    A: Send,
    Init: Fn() -> A + Sync + Send,
    Fold: Fn(A, usize) -> A + Sync + Send,
    Merge: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().fold(&init, &fold).reduce(&init, &merge);
    }
    let _ = (exec, &merge);
    (0..n).fold(init(), fold)
}
