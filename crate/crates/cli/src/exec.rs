//! Thread-pool executor for the box tests.

use rayon::prelude::*;
use sampcert_core::geometry::HyperRect;
use sampcert_core::verifier::{BoxResult, Executor, SerialExecutor};

/// Runs each level of boxes on a rayon pool. `par_iter().collect()` keeps
/// input order, so results do not depend on the worker count.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(workers: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
        Ok(RayonExecutor { pool })
    }
}

impl Executor for RayonExecutor {
    fn map(&self, boxes: &[HyperRect], f: &(dyn Fn(&HyperRect) -> BoxResult + Sync)) -> Vec<BoxResult> {
        self.pool.install(|| boxes.par_iter().map(f).collect())
    }
}

/// Serial for one worker, a pool otherwise.
pub fn executor(workers: usize) -> anyhow::Result<Box<dyn Executor>> {
    Ok(if workers <= 1 {
        Box::new(SerialExecutor)
    } else {
        Box::new(RayonExecutor::new(workers)?)
    })
}
