use alloc::vec::Vec;

use super::adam::AdamState;
use super::model::{loss_and_grad, ModelParams, Network, OUTPUTS};
use crate::error::{Error, Result};
use crate::sensing::Features;

/// One training example: a normalized window and its normalized target.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub window: &'a [Features],
    pub target: [f64; OUTPUTS],
}

/// Mean loss and mean gradient over a batch.
///
/// Each sample's gradient is computed into a fresh buffer and then added to
/// the running total in batch order; a parallel caller that computes the
/// per-sample gradients concurrently and folds them in the same order gets
/// bit-identical results.
pub fn batch_gradient(params: &ModelParams, batch: &[Example<'_>]) -> Result<(f64, Network)> {
    if batch.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut total = params.network.zeros_like();
    let mut scratch = params.network.zeros_like();
    let mut losses = Vec::with_capacity(batch.len());
    for ex in batch {
        losses.push(loss_and_grad(params, ex.window, &ex.target, &mut scratch)?);
        total.add_assign(&scratch);
    }
    Ok(finish_batch(&losses, total))
}

/// Averages a batch: `losses` in batch order and the ordered sum of
/// per-sample gradients.
pub fn finish_batch(losses: &[f64], mut grad_sum: Network) -> (f64, Network) {
    let n = losses.len() as f64;
    let loss = losses.iter().sum::<f64>() / n;
    grad_sum.scale(1.0 / n);
    (loss, grad_sum)
}

/// Applies one optimizer update from an already averaged gradient.
pub fn apply_update(params: &mut ModelParams, adam: &mut AdamState, loss: f64, grads: &Network) -> Result<()> {
    if !loss.is_finite() || !grads.is_finite() {
        return Err(Error::Divergence { step: adam.step, loss });
    }
    adam.update(&mut params.network, grads)
}

/// One optimization step on a batch; returns the batch loss before the update.
pub fn train_step(params: &mut ModelParams, adam: &mut AdamState, batch: &[Example<'_>]) -> Result<f64> {
    let (loss, grads) = batch_gradient(params, batch)?;
    apply_update(params, adam, loss, &grads)?;
    Ok(loss)
}
