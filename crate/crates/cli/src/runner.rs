//! Thread-pool execution of indexed jobs. Results come back in index order
//! and every job draws from its own substream, so output does not depend
//! on the thread count.

use rayon::prelude::*;
use tessellate::experiments::{TrialOutcome, TrialRunner};

use crate::error::{CliError, CliResult};

pub struct PoolRunner {
    pool: rayon::ThreadPool,
}

impl PoolRunner {
    /// `threads = None` uses the available cores.
    pub fn new(threads: Option<usize>) -> CliResult<Self> {
        let n = match threads {
            Some(0) => return Err(CliError::Usage("`threads` must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn map<T: Send>(&self, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
        self.pool.install(|| (0..jobs).into_par_iter().map(&f).collect())
    }
}

impl TrialRunner for PoolRunner {
    fn run(
        &self,
        jobs: usize,
        job: &(dyn Fn(usize) -> tessellate::Result<TrialOutcome> + Sync),
    ) -> Vec<tessellate::Result<TrialOutcome>> {
        self.map(jobs, job)
    }
}
