//! Worker pools and order-preserving parallel sections.
//!
//! Work is always split into pieces whose boundaries do not depend on the
//! number of threads, and results are folded in piece order, so every output
//! is bit-identical for any worker count.

use pnid_core::dataset::{assemble, run_slot, scenario_design, Dataset, DatasetConfig};
use pnid_core::nn::{finish_batch, loss_and_grad, Example, ModelParams, Network};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Samples per gradient shard.
pub const GRAD_CHUNK: usize = 16;

pub struct Workers {
    pool: Option<rayon::ThreadPool>,
}

impl Workers {
    /// `0` uses the global pool (one thread per core).
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Ok(Self { pool: None });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {count} worker threads: {e}")))?;
        Ok(Self { pool: Some(pool) })
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or_else(rayon::current_num_threads, |p| p.current_num_threads())
    }
}

/// Dataset generation with trajectories simulated in parallel and collected
/// in slot order.
pub fn generate_dataset(cfg: &DatasetConfig, workers: &Workers) -> Result<Dataset> {
    cfg.validate()?;
    let design = scenario_design(cfg);
    let records = workers
        .install(|| (0..cfg.trajectories).into_par_iter().map(|slot| run_slot(cfg, &design, slot)).collect::<Vec<_>>());
    let records = records.into_iter().collect::<pnid_core::Result<Vec<_>>>()?;
    Ok(assemble(cfg, records)?)
}

fn shard_gradient(params: &ModelParams, shard: &[Example<'_>]) -> pnid_core::Result<(Vec<f64>, Network)> {
    let mut total = params.network.zeros_like();
    let mut scratch = params.network.zeros_like();
    let mut losses = Vec::with_capacity(shard.len());
    for ex in shard {
        losses.push(loss_and_grad(params, ex.window, &ex.target, &mut scratch)?);
        total.add_assign(&scratch);
    }
    Ok((losses, total))
}

/// Mean loss and gradient over a batch, sharded across workers.
pub fn batch_gradient(params: &ModelParams, batch: &[Example<'_>], workers: &Workers) -> Result<(f64, Network)> {
    if batch.is_empty() {
        return Err(pnid_core::Error::InsufficientData { needed: 1, got: 0 }.into());
    }
    let shards =
        workers.install(|| batch.par_chunks(GRAD_CHUNK).map(|s| shard_gradient(params, s)).collect::<Vec<_>>());
    let mut losses = Vec::with_capacity(batch.len());
    let mut total: Option<Network> = None;
    for shard in shards {
        let (l, g) = shard?;
        losses.extend(l);
        match &mut total {
            Some(t) => t.add_assign(&g),
            None => total = Some(g),
        }
    }
    Ok(finish_batch(&losses, total.expect("non-empty batch")))
}

/// Evaluates `f` over `0..n` in parallel, results in index order.
pub fn map_indexed<T: Send>(n: usize, workers: &Workers, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    workers.install(|| (0..n).into_par_iter().map(&f).collect())
}
