//! Trial scheduling. Work items are indexed and results always come back in
//! index order, so output does not depend on the schedule.

/// How independent work items are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Data-parallel over a rayon pool; `threads == 0` uses the global pool.
    /// Without the `parallel` feature this runs sequentially.
    #[default]
    Parallel,
    ParallelWith {
        threads: usize,
    },
}

impl Execution {
    /// `threads <= 1` is sequential, anything else a dedicated pool of that size.
    pub fn with_threads(threads: usize) -> Self {
        match threads {
            0 => Execution::Parallel,
            1 => Execution::Sequential,
            n => Execution::ParallelWith { threads: n },
        }
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => par_map(n, f),
            Execution::ParallelWith { threads } => {
                #[cfg(feature = "parallel")]
                {
                    match rayon::ThreadPoolBuilder::new().num_threads(*threads).build() {
                        Ok(pool) => pool.install(|| par_map(n, f)),
                        Err(_) => par_map(n, f),
                    }
                }
                #[cfg(not(feature = "parallel"))]
                {
                    let _ = threads;
                    (0..n).map(f).collect()
                }
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
