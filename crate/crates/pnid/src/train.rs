//! Mini-batch training with a per-iteration loss record, and the side-by-side
//! comparison of the two output heads.

use pnid_core::dataset::{Dataset, Sample};
use pnid_core::nn::{
    apply_update, init_model, model_forward, AdamState, Example, HeadKind, ModelConfig, ModelParams, OUTPUTS,
};
use pnid_core::rng::{derived_rng, domain};
use rayon::prelude::*;

use crate::config::TrainSection;
use crate::error::{Error, Result};
use crate::parallel::{batch_gradient, Workers};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub iteration: u64,
    /// Batch loss before the update.
    pub loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub optimizer: AdamState,
    pub curve: Vec<CurvePoint>,
    /// Normalized MSE over the whole training split before the first update.
    pub initial_mse: f64,
    pub final_mse: f64,
    /// Per-output normalized MSE on the validation split after training.
    pub validation_mse: [f64; OUTPUTS],
    pub seed: u64,
}

/// Training-set indices for iteration `step`, drawn without replacement.
pub fn batch_indices(seed: u64, step: u64, n: usize, batch: usize) -> Vec<usize> {
    let mut rng = derived_rng(seed, domain::BATCH, step);
    rand::seq::index::sample(&mut rng, n, batch.min(n)).into_vec()
}

/// Per-output normalized MSE of a model over samples (zeros when empty).
pub fn split_mse(params: &ModelParams, samples: &[Sample], workers: &Workers) -> Result<[f64; OUTPUTS]> {
    if samples.is_empty() {
        return Ok([0.0; OUTPUTS]);
    }
    let errs = workers.install(|| {
        samples
            .par_iter()
            .map(|s| {
                model_forward(params, &s.window)
                    .map(|e| std::array::from_fn::<f64, OUTPUTS, _>(|i| (e.normalized[i] - s.label[i]).powi(2)))
            })
            .collect::<Vec<_>>()
    });
    let mut acc = [0.0; OUTPUTS];
    for e in errs {
        let e = e?;
        for i in 0..OUTPUTS {
            acc[i] += e[i];
        }
    }
    Ok(acc.map(|v| v / samples.len() as f64))
}

pub fn combined(mse: [f64; OUTPUTS]) -> f64 {
    mse.iter().sum::<f64>() / OUTPUTS as f64
}

/// Trains one model. Initialization draws from the `INIT` stream and batch
/// `k` from the `BATCH` stream at index `k`, so two runs with the same seed
/// see the same data in the same order whatever the head or worker count.
pub fn train(
    dataset: &Dataset,
    model: &ModelConfig,
    settings: &TrainSection,
    seed: u64,
    workers: &Workers,
    mut progress: impl FnMut(&CurvePoint),
) -> Result<TrainOutcome> {
    if dataset.train.is_empty() {
        return Err(Error::Config("dataset has no training samples".into()));
    }
    let mut params = init_model(model, &dataset.norm, &mut derived_rng(seed, domain::INIT, 0))?;
    let mut optimizer = AdamState::new(settings.adam, &params.network);
    let initial_mse = combined(split_mse(&params, &dataset.train, workers)?);
    let mut curve = Vec::with_capacity(settings.iterations as usize);
    for step in 0..settings.iterations {
        let idx = batch_indices(seed, step, dataset.train.len(), settings.batch_size);
        let batch: Vec<Example<'_>> = idx.iter().map(|&i| dataset.train[i].example()).collect();
        let learning_rate = optimizer.learning_rate();
        let (loss, grads) = batch_gradient(&params, &batch, workers)?;
        apply_update(&mut params, &mut optimizer, loss, &grads)?;
        let point = CurvePoint { iteration: step, loss, learning_rate };
        progress(&point);
        curve.push(point);
    }
    let final_mse = combined(split_mse(&params, &dataset.train, workers)?);
    let validation_mse = split_mse(&params, &dataset.validation, workers)?;
    Ok(TrainOutcome { params, optimizer, curve, initial_mse, final_mse, validation_mse, seed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub immm: TrainOutcome,
    pub linear: TrainOutcome,
}

/// Trains both heads with the same backbone initialization, seed, batches
/// and schedule.
pub fn compare_training(
    dataset: &Dataset,
    model: &ModelConfig,
    settings: &TrainSection,
    seed: u64,
    workers: &Workers,
) -> Result<Comparison> {
    let with = |head| ModelConfig { head, ..model.clone() };
    let immm = train(dataset, &with(HeadKind::Immm), settings, seed, workers, |_| {})?;
    let linear = train(dataset, &with(HeadKind::Linear), settings, seed, workers, |_| {})?;
    Ok(Comparison { immm, linear })
}

/// Trailing moving average of the loss curve (`window` points, shorter at
/// the start).
pub fn moving_average(curve: &[CurvePoint], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(curve.len());
    let mut sum = 0.0;
    for (i, p) in curve.iter().enumerate() {
        sum += p.loss;
        if i >= w {
            sum -= curve[i - w].loss;
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

/// Whether block means over consecutive `window`-iteration blocks never
/// increase.
pub fn blocks_non_increasing(curve: &[CurvePoint], window: usize) -> bool {
    let means: Vec<f64> = curve
        .chunks(window.max(1))
        .filter(|c| c.len() == window.max(1))
        .map(|c| c.iter().map(|p| p.loss).sum::<f64>() / c.len() as f64)
        .collect();
    means.windows(2).all(|w| w[1] <= w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_are_distinct_indices_and_reproducible() {
        let a = batch_indices(3, 7, 100, 32);
        assert_eq!(a, batch_indices(3, 7, 100, 32));
        assert_ne!(a, batch_indices(3, 8, 100, 32));
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 32);
        assert!(s.iter().all(|&i| i < 100));
        assert_eq!(batch_indices(1, 0, 5, 32).len(), 5);
    }

    #[test]
    fn moving_average_of_constant_is_constant() {
        let curve: Vec<_> = (0..10).map(|i| CurvePoint { iteration: i, loss: 2.0, learning_rate: 0.1 }).collect();
        assert!(moving_average(&curve, 3).iter().all(|&v| v == 2.0));
        assert!(blocks_non_increasing(&curve, 3));
    }
}
