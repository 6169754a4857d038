//! Sequential or data-parallel execution of batch work.
//!
//! Batch entry points (multi-trace comparisons, size sweeps, instance sets)
//! take an [`ExecMode`] and fan independent items out across threads when
//! asked.
//! Results are returned in input order either way, and every item is
//! deterministic given its own seed, so the two modes produce identical
//! output — only wall-clock time differs. The `parallel` cargo feature
//! (on by default) gates the rayon dependency; without it `Parallel` falls
//! back to sequential execution.

/// How a batch of independent items is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// One item at a time, on the calling thread.
    Sequential,
    /// Fan out across the rayon thread pool (built with the `parallel`
    /// feature), preserving input order in the results.
    #[default]
    Parallel,
}

/// Maps `f` over `items`, honoring the execution mode. Output order matches
/// input order in both modes.
pub fn map_items<T, R, F>(mode: ExecMode, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match mode {
        ExecMode::Sequential => items.into_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => items.into_iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order_and_agree() {
        let items: Vec<u64> = (0..200).collect();
        let f = |x: u64| x * x + 1;
        let seq = map_items(ExecMode::Sequential, items.clone(), f);
        let par = map_items(ExecMode::Parallel, items, f);
        assert_eq!(seq, par);
        assert_eq!(seq[3], 10);
    }
}
