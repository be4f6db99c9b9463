//! Worker pool for independent, index-addressed work units.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub struct Executor {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
        Ok(Executor { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(0), …, f(n−1)` evaluated on the pool, returned in index order.
    pub fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }

    pub fn try_map<T, F>(&self, n: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::new(1).expect("a single worker pool always starts")
    }
}
