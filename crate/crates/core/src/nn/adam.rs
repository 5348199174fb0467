use alloc::vec;
use alloc::vec::Vec;

use super::model::Network;
use crate::error::{Error, Result};
use crate::math;

/// Adam hyperparameters and the step-decay learning-rate schedule
/// `rate = base_rate * decay^floor(step / decay_every)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdamConfig {
    pub base_rate: f64,
    pub decay: f64,
    pub decay_every: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { base_rate: 0.002, decay: 0.99, decay_every: 100, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    /// Number of updates applied so far.
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, network: &Network) -> Self {
        let n = network.param_count();
        Self { config, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    /// Rate used by the next update.
    pub fn learning_rate(&self) -> f64 {
        let c = &self.config;
        let periods = self.step / c.decay_every.max(1);
        c.base_rate * math::powi(c.decay, periods.min(i32::MAX as u64) as i32)
    }

    pub fn update(&mut self, params: &mut Network, grads: &Network) -> Result<()> {
        if self.m.len() != params.param_count() || grads.param_count() != self.m.len() {
            return Err(Error::Shape("optimizer state does not match the network".into()));
        }
        let c = self.config;
        let rate = self.learning_rate();
        let t = (self.step + 1) as f64;
        let bc1 = 1.0 - libm::pow(c.beta1, t);
        let bc2 = 1.0 - libm::pow(c.beta2, t);
        let mut offset = 0;
        for (p, g) in params.slices_mut().into_iter().zip(grads.slices()) {
            let m = &mut self.m[offset..offset + p.len()];
            let v = &mut self.v[offset..offset + p.len()];
            for i in 0..p.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= rate * m_hat / (math::sqrt(v_hat) + c.epsilon);
            }
            offset += p.len();
        }
        self.step += 1;
        Ok(())
    }
}
