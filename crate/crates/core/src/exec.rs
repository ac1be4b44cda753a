//! Data-parallel execution helpers.
//!
//! With the `parallel` feature (default) work is spread over rayon pools.
//! Without it every helper degrades to a plain sequential loop, which keeps
//! the crate usable on targets where spawning threads is undesirable.

/// How batch work (fan-out children, per-unit assessment, downloads) is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this mode will actually run work concurrently in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Map `f` over `items`, preserving input order in the output.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel && items.len() > 1 {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`Execution::map`] but with at most `limit` items in flight.
    ///
    /// A dedicated pool is built per call so nested fan-out inside `f`
    /// shares the same bounded set of workers.
    pub fn map_bounded<T, R, F>(self, items: &[T], limit: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel && items.len() > 1 && limit > 1 {
            use rayon::prelude::*;
            if let Ok(pool) = rayon::ThreadPoolBuilder::new()
                .num_threads(limit.min(items.len()))
                .build()
            {
                return pool.install(|| items.par_iter().map(&f).collect());
            }
        }
        let _ = limit;
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u32> = (0..64).collect();
        for mode in [Execution::Sequential, Execution::Parallel] {
            let out = mode.map(&items, |x| x * 2);
            assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
            let out = mode.map_bounded(&items, 3, |x| x + 1);
            assert_eq!(out, items.iter().map(|x| x + 1).collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_input() {
        let items: Vec<u8> = Vec::new();
        assert!(Execution::Parallel.map(&items, |x| *x).is_empty());
        assert!(Execution::Parallel
            .map_bounded(&items, 4, |x| *x)
            .is_empty());
    }
}
