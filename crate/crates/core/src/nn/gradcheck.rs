use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::model::{loss_and_grad, sample_loss, ModelParams, Network, OUTPUTS};
use crate::error::Result;
use crate::rng;
use crate::sensing::Features;

/// Gradients smaller than this are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-4;

/// Which parameters to perturb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSubset {
    All,
    /// A random subset of `count` entries.
    Random {
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares backpropagated gradients with central differences of step
/// `epsilon` and returns the worst relative error.
pub fn grad_check(
    params: &ModelParams,
    window: &[Features],
    target: &[f64; OUTPUTS],
    epsilon: f64,
    subset: ParamSubset,
) -> Result<GradCheckReport> {
    let mut analytic = params.network.zeros_like();
    loss_and_grad(params, window, target, &mut analytic)?;
    grad_check_against(params, window, target, epsilon, subset, &analytic)
}

/// Like [`grad_check`] but against a caller-supplied gradient.
pub fn grad_check_against(
    params: &ModelParams,
    window: &[Features],
    target: &[f64; OUTPUTS],
    epsilon: f64,
    subset: ParamSubset,
    analytic: &Network,
) -> Result<GradCheckReport> {
    let specs = params.network.tensor_specs();
    let sizes: Vec<usize> = params.network.slices().iter().map(|s| s.len()).collect();
    let total: usize = sizes.iter().sum();
    let entries: Vec<usize> = match subset {
        ParamSubset::All => (0..total).collect(),
        ParamSubset::Random { count, seed } => {
            let mut r = rng::rng_from_seed(seed);
            (0..count.min(total)).map(|_| r.random_range(0..total)).collect()
        }
    };
    let analytic_flat: Vec<f64> = analytic.slices().iter().flat_map(|s| s.iter().copied()).collect();
    let mut probe = params.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0 };
    for flat in entries {
        let (tensor, index) = locate(&sizes, flat);
        let original = params.network.slices()[tensor][index];
        probe.network.slices_mut()[tensor][index] = original + epsilon;
        let plus = sample_loss(&probe, window, target)?;
        probe.network.slices_mut()[tensor][index] = original - epsilon;
        let minus = sample_loss(&probe, window, target)?;
        probe.network.slices_mut()[tensor][index] = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let err = relative_error(analytic_flat[flat], numeric);
        report.checked += 1;
        if report.worst.is_none() || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = Some((specs[tensor].0.clone(), index));
        }
    }
    Ok(report)
}

fn locate(sizes: &[usize], mut flat: usize) -> (usize, usize) {
    for (t, &n) in sizes.iter().enumerate() {
        if flat < n {
            return (t, flat);
        }
        flat -= n;
    }
    unreachable!("flat index beyond parameter count")
}
