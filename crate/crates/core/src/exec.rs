//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) `Execution::Parallel` runs on
//! the rayon global pool; without it every call is sequential. Results never
//! depend on the choice: work is split into index ranges whose outputs are
//! collected in index order and reduced sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel; output order is index
/// order either way.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Splits `0..total` into contiguous chunks of at most `chunk` items and maps
/// each `(start, end)` range.
pub fn map_chunks<T, F>(exec: Execution, total: u64, chunk: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let n = total.div_ceil(chunk) as usize;
    map_indexed(exec, n, |i| {
        let start = i as u64 * chunk;
        f(start, (start + chunk).min(total))
    })
}

/// Runs `f` with at most `threads` worker threads (0 = all cores).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range_in_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let ranges = map_chunks(exec, 10, 3, |a, b| (a, b));
            assert_eq!(ranges, vec![(0, 3), (3, 6), (6, 9), (9, 10)]);
        }
        assert!(map_chunks(Execution::Parallel, 0, 3, |a, b| (a, b)).is_empty());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let a = with_threads(1, || map_indexed(Execution::Parallel, 100, |i| i * i));
        let b = with_threads(3, || map_indexed(Execution::Parallel, 100, |i| i * i));
        assert_eq!(a, b);
    }
}
