//! Execution modes for the data-parallel inner loops.
//!
//! Every batch operation in the crate takes an [`Execution`]. With the
//! `parallel` feature (default) `Execution::Parallel` fans out over a rayon
//! pool; without it, every mode runs on the calling thread. The two modes
//! must produce identical results, which the test suites check directly.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Parallel over the global pool, or over a dedicated pool of `workers`
    /// threads when set.
    Parallel { workers: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { workers: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn parallel() -> Self {
        Execution::Parallel { workers: None }
    }

    /// A bounded pool of `workers` threads (clamped to at least one).
    pub fn bounded(workers: usize) -> Self {
        Execution::Parallel {
            workers: Some(workers.max(1)),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel { workers } => {
                use rayon::prelude::*;
                run_in_pool(workers, || items.par_iter().map(&f).collect())
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Map every item to a partial accumulator and merge them. `merge` must be
    /// associative and commutative for the two modes to agree.
    pub fn fold<T, A, F, M>(self, items: &[T], init: impl Fn() -> A + Sync + Send, f: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        F: Fn(&mut A, &T) + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel { workers } => {
                use rayon::prelude::*;
                run_in_pool(workers, || {
                    items
                        .par_iter()
                        .fold(&init, |mut acc, item| {
                            f(&mut acc, item);
                            acc
                        })
                        .reduce(&init, &merge)
                })
            }
            _ => {
                let _ = &merge;
                let mut acc = init();
                for item in items {
                    f(&mut acc, item);
                }
                acc
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn run_in_pool<R: Send>(workers: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    match workers {
        None => op(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(op),
            Err(err) => {
                log::warn!("could not build a {n}-thread pool ({err}); using the global pool");
                op()
            }
        },
    }
}

pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    let n = rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    let n = 1;
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_in_every_mode() {
        let items: Vec<u32> = (0..1000).collect();
        for exec in [Execution::Sequential, Execution::parallel(), Execution::bounded(3)] {
            let out = exec.map(&items, |x| x * 2);
            assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn fold_agrees_across_modes() {
        let items: Vec<u64> = (1..=10_000).collect();
        let sum = |exec: Execution| exec.fold(&items, || 0u64, |acc, x| *acc += x, |a, b| a + b);
        assert_eq!(sum(Execution::Sequential), 50_005_000);
        assert_eq!(sum(Execution::parallel()), 50_005_000);
        assert_eq!(sum(Execution::bounded(2)), 50_005_000);
    }

    #[test]
    fn bounded_clamps_to_one() {
        assert_eq!(Execution::bounded(0), Execution::Parallel { workers: Some(1) });
    }
}
