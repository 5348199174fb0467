//! Grouped multiple-model output head.
//!
//! Each regression target owns a fixed, ascending bank of candidate values
//! ("regimes"). The final hidden state is mapped to one logit per regime
//! through a per-group weight matrix; a per-group softmax turns the logits
//! into weights and the output is the weighted sum of the group's regimes.
//! Groups share no connections, and every output is a convex combination of
//! its own bank, so it can never leave `[min, max]` of that bank.

use alloc::vec;
use alloc::vec::Vec;

use super::tensor::Matrix;
use crate::error::{config, Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeGroup {
    /// Candidate values, strictly increasing, physical units.
    pub regimes: Vec<f64>,
    /// `p × hidden` gating weights.
    pub w: Matrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeBank {
    pub groups: Vec<RegimeGroup>,
}

impl RegimeBank {
    /// Banks with the given regime values and zero gating parameters.
    pub fn new(banks: &[Vec<f64>], hidden: usize) -> Result<Self> {
        let groups = banks
            .iter()
            .map(|regimes| {
                if regimes.len() < 2 {
                    return Err(config("each regime group needs at least two regimes"));
                }
                if regimes.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(config("regime values must be strictly increasing"));
                }
                Ok(RegimeGroup {
                    regimes: regimes.clone(),
                    w: Matrix::zeros(regimes.len(), hidden),
                    b: vec![0.0; regimes.len()],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { groups })
    }

    /// `count` evenly spaced regimes from `min` to `max` inclusive.
    pub fn evenly_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
        let steps = (count.max(2) - 1) as f64;
        (0..count.max(2))
            .map(|j| if j + 1 == count.max(2) { max } else { min + (max - min) * j as f64 / steps })
            .collect()
    }

    pub fn hidden(&self) -> usize {
        self.groups.first().map_or(0, |g| g.w.cols)
    }

    /// Trainable parameter count, `sum_i (hidden * p_i + p_i)`.
    pub fn param_count(&self) -> usize {
        self.groups.iter().map(|g| g.w.data.len() + g.b.len()).sum()
    }

    pub fn check_shapes(&self, hidden: usize) -> Result<()> {
        for (i, g) in self.groups.iter().enumerate() {
            let p = g.regimes.len();
            if g.w.rows != p || g.w.cols != hidden || g.b.len() != p {
                return Err(Error::Shape(alloc::format!(
                    "regime group {i}: expected {p}x{hidden} gating weights and {p} biases"
                )));
            }
        }
        Ok(())
    }
}

/// Numerically stable softmax (max-shifted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        // Saturated logits: share the mass among the +inf entries.
        let count = logits.iter().filter(|&&l| l == f64::INFINITY).count() as f64;
        return logits.iter().map(|&l| if l == f64::INFINITY { 1.0 / count } else { 0.0 }).collect();
    }
    let mut e: Vec<f64> = logits.iter().map(|&l| math::exp(l - max)).collect();
    let sum: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= sum);
    e
}

/// Per-group regime weights and outputs for a final hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmmOutput {
    pub outputs: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

pub fn immm_forward(h_last: &[f64], bank: &RegimeBank) -> Result<ImmmOutput> {
    bank.check_shapes(h_last.len())?;
    let mut outputs = Vec::with_capacity(bank.groups.len());
    let mut weights = Vec::with_capacity(bank.groups.len());
    for g in &bank.groups {
        let mut logits = g.b.clone();
        g.w.matvec_add(h_last, &mut logits);
        let w = softmax(&logits);
        outputs.push(group_output(&g.regimes, &w));
        weights.push(w);
    }
    Ok(ImmmOutput { outputs, weights })
}

/// Weighted regime sum, clamped to the bank so rounding can never push it
/// outside `[min, max]`.
pub fn group_output(regimes: &[f64], weights: &[f64]) -> f64 {
    let o: f64 = regimes.iter().zip(weights).map(|(l, w)| l * w).sum();
    o.clamp(regimes[0], regimes[regimes.len() - 1])
}

/// Backward pass of the head. `d_out[i]` is dL/dO_i; gating gradients are
/// accumulated into `grads` and dL/dh_last is returned.
pub(crate) fn immm_backward(
    h_last: &[f64],
    bank: &RegimeBank,
    forward: &ImmmOutput,
    d_out: &[f64],
    grads: &mut RegimeBank,
) -> Vec<f64> {
    let mut dh = vec![0.0; h_last.len()];
    for (i, g) in bank.groups.iter().enumerate() {
        let w = &forward.weights[i];
        let o = forward.outputs[i];
        // dO/dlogit_j = G_j (lambda_j - O)
        let dlogits: Vec<f64> = w.iter().zip(&g.regimes).map(|(gj, lj)| d_out[i] * gj * (lj - o)).collect();
        let gg = &mut grads.groups[i];
        gg.w.outer_add(&dlogits, h_last);
        for (b, d) in gg.b.iter_mut().zip(&dlogits) {
            *b += d;
        }
        g.w.matvec_t_add(&dlogits, &mut dh);
    }
    dh
}
