//! Published reference values (full-scale run) used to annotate reports.
//! Desk-scale runs are not expected to match them.

use serde::Deserialize;

const TEXT: &str = include_str!("../fixtures/published_reference.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrainingReference {
    pub linear_initial_mse: f64,
    pub immm_initial_mse: f64,
    pub linear_final_mse: f64,
    pub immm_final_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MonteCarloReference {
    pub runs: usize,
    pub mse_gain: f64,
    pub mse_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GridReference {
    pub trajectories_per_cell: usize,
    pub windows_per_trajectory: usize,
    pub gain: Vec<f64>,
    pub tau: Vec<f64>,
    pub mse_e3: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DragReference {
    pub runs_per_point: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SampleRunReference {
    pub initial_gain: f64,
    pub initial_tau: f64,
    pub converged_after_s: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Reference {
    pub training: TrainingReference,
    pub monte_carlo: MonteCarloReference,
    pub grid: GridReference,
    pub drag_sweep: DragReference,
    pub sample_run: SampleRunReference,
}

pub fn published() -> Reference {
    toml::from_str(TEXT).expect("bundled reference fixture parses")
}

impl GridReference {
    /// Reference cell MSE (unscaled) nearest to `(gain, tau)`.
    pub fn nearest(&self, gain: f64, tau: f64) -> f64 {
        let idx = |xs: &[f64], v: f64| {
            (0..xs.len()).min_by(|&a, &b| (xs[a] - v).abs().total_cmp(&(xs[b] - v).abs())).unwrap_or(0)
        };
        self.mse_e3[idx(&self.gain, gain)][idx(&self.tau, tau)] * 1e-3
    }
}
