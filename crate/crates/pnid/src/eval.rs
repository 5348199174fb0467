//! Evaluation experiments: held-out Monte Carlo, fixed-parameter grid, drag
//! sweep and the single-scenario replay.
//!
//! Every experiment draws its scenarios from the `EVAL` seed domain and
//! checks that none of its trajectory ids belongs to the model's training
//! split. Scenarios are simulated in parallel and gathered in slot order.

use std::collections::HashSet;
use std::time::Instant;

use pnid_core::dataset::{
    observe, run_slot_with, scenario_design, window_ending_at, DatasetConfig, ParamBox, RawSample, SensorConfig,
    TrajectoryRecord,
};
use pnid_core::nn::{model_forward, ModelParams, OUTPUTS};
use pnid_core::rng::{derive_seed, domain};
use pnid_core::sim::{simulate, EngagementConfig, Termination};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::parallel::{map_indexed, Workers};

/// Index tags under the `EVAL` domain.
pub mod stream {
    pub const MONTE_CARLO: u64 = 1;
    pub const DRAG_SWEEP: u64 = 2;
    pub const SAMPLE_RUN: u64 = 3;
    /// Grid cell `c` uses `GRID + c`.
    pub const GRID: u64 = 1 << 20;
}

pub fn eval_seed(master: u64, tag: u64) -> u64 {
    derive_seed(master, domain::EVAL, tag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSample {
    pub trajectory: u64,
    pub end_tick: usize,
    /// `[N, tau]` in physical units.
    pub truth: [f64; OUTPUTS],
    pub estimate: [f64; OUTPUTS],
    /// Same, min-max normalized with the model's label statistics.
    pub truth_normalized: [f64; OUTPUTS],
    pub estimate_normalized: [f64; OUTPUTS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub runs: usize,
    pub samples: Vec<EvalSample>,
    /// Per-output MSE in normalized units (zeros for an empty report).
    pub mse_normalized: [f64; OUTPUTS],
    /// Per-output MSE in physical units.
    pub mse_physical: [f64; OUTPUTS],
    pub runtime_seconds: f64,
}

impl EvalReport {
    pub fn from_samples(runs: usize, samples: Vec<EvalSample>, runtime_seconds: f64) -> Self {
        let mut norm = [0.0; OUTPUTS];
        let mut phys = [0.0; OUTPUTS];
        for s in &samples {
            for i in 0..OUTPUTS {
                norm[i] += (s.estimate_normalized[i] - s.truth_normalized[i]).powi(2);
                phys[i] += (s.estimate[i] - s.truth[i]).powi(2);
            }
        }
        let n = samples.len().max(1) as f64;
        Self { runs, samples, mse_normalized: norm.map(|v| v / n), mse_physical: phys.map(|v| v / n), runtime_seconds }
    }

    /// Mean of the per-output normalized MSEs (the training loss's scale).
    pub fn combined_normalized(&self) -> f64 {
        self.mse_normalized.iter().sum::<f64>() / OUTPUTS as f64
    }
}

/// Shared settings of the evaluation experiments.
#[derive(Debug, Clone)]
pub struct EvalSetup<'a> {
    pub model: &'a ModelParams,
    pub param_box: ParamBox,
    pub base: EngagementConfig,
    pub sensor: SensorConfig,
    pub windows_per_run: usize,
    pub min_window: usize,
    pub max_retries: usize,
    pub train_ids: &'a [u64],
}

impl EvalSetup<'_> {
    fn dataset_config(&self, runs: usize, seed: u64) -> DatasetConfig {
        DatasetConfig {
            param_box: self.param_box.clone(),
            base: self.base.clone(),
            sensor: self.sensor,
            trajectories: runs,
            windows_per_trajectory: self.windows_per_run,
            input_steps: self.model.input_steps,
            min_window: self.min_window,
            train_fraction: 1.0,
            seed,
            max_retries: self.max_retries,
        }
    }

    fn check_disjoint(&self, cfg: &DatasetConfig) -> Result<()> {
        let train: HashSet<u64> = self.train_ids.iter().copied().collect();
        let shared = (0..cfg.trajectories).filter(|&s| train.contains(&cfg.trajectory_id(s))).count();
        if shared > 0 {
            return Err(Error::Leakage(shared));
        }
        Ok(())
    }

    /// Simulates `runs` scenarios (after `adjust`) and evaluates their windows.
    fn run(
        &self,
        runs: usize,
        seed: u64,
        workers: &Workers,
        adjust: impl Fn(&mut pnid_core::dataset::Scenario) + Sync + Send,
    ) -> Result<EvalReport> {
        let start = Instant::now();
        if runs == 0 {
            return Ok(EvalReport::from_samples(0, Vec::new(), 0.0));
        }
        let cfg = self.dataset_config(runs, seed);
        cfg.validate()?;
        self.check_disjoint(&cfg)?;
        let design = scenario_design(&cfg);
        let records = map_indexed(runs, workers, |slot| run_slot_with(&cfg, &design, slot, &adjust));
        let records = records.into_iter().collect::<pnid_core::Result<Vec<TrajectoryRecord>>>()?;
        let raw: Vec<&RawSample> = records.iter().flat_map(|r| r.samples.iter()).collect();
        let samples = workers.install(|| raw.par_iter().map(|s| evaluate_window(self.model, s)).collect::<Vec<_>>());
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(EvalReport::from_samples(runs, samples, start.elapsed().as_secs_f64()))
    }
}

/// Runs the model on one physical-unit window.
pub fn evaluate_window(model: &ModelParams, s: &RawSample) -> Result<EvalSample> {
    let norm = &model.norm;
    let window: Vec<_> = s.window.iter().map(|r| norm.normalize_features(r)).collect();
    let e = model_forward(model, &window)?;
    Ok(EvalSample {
        trajectory: s.trajectory,
        end_tick: s.end_tick,
        truth: s.label,
        estimate: e.physical,
        truth_normalized: norm.normalize_labels(&s.label),
        estimate_normalized: e.normalized,
    })
}

/// Held-out Monte Carlo evaluation over the scenario box.
pub fn monte_carlo_eval(setup: &EvalSetup<'_>, n_runs: usize, seed: u64, workers: &Workers) -> Result<EvalReport> {
    setup.run(n_runs, eval_seed(seed, stream::MONTE_CARLO), workers, |_| {})
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub gain: f64,
    pub tau: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub gains: Vec<f64>,
    pub taus: Vec<f64>,
    /// Row-major: gain outer, tau inner.
    pub cells: Vec<GridCell>,
}

impl GridReport {
    /// Largest over smallest combined normalized cell MSE.
    pub fn spread(&self) -> f64 {
        let v: Vec<f64> = self.cells.iter().map(|c| c.report.combined_normalized()).collect();
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// One report per `(N, tau)` cell with the other parameters randomized.
pub fn grid_eval(
    setup: &EvalSetup<'_>,
    gains: &[f64],
    taus: &[f64],
    runs_per_cell: usize,
    seed: u64,
    workers: &Workers,
) -> Result<GridReport> {
    let mut cells = Vec::with_capacity(gains.len() * taus.len());
    for (gi, &gain) in gains.iter().enumerate() {
        for (ti, &tau) in taus.iter().enumerate() {
            let tag = stream::GRID + (gi * taus.len() + ti) as u64;
            let report = setup.run(runs_per_cell, eval_seed(seed, tag), workers, |s| {
                s.gain = gain;
                s.tau = tau;
            })?;
            cells.push(GridCell { gain, tau, report });
        }
    }
    Ok(GridReport { gains: gains.to_vec(), taus: taus.to_vec(), cells })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub x: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub variable: String,
    /// Sorted by `x`.
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn at(&self, x: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.x == x)
    }
}

/// Re-simulates the same scenarios with the drag coefficient scaled by each
/// factor in turn.
pub fn drag_sweep_eval(
    setup: &EvalSetup<'_>,
    deltas: &[f64],
    runs_per_point: usize,
    seed: u64,
    workers: &Workers,
) -> Result<SweepCurve> {
    let mut xs = deltas.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut points = Vec::with_capacity(xs.len());
    for x in xs {
        let mut s = setup.clone();
        s.base.missile.drag_scale = x;
        let report = s.run(runs_per_point, eval_seed(seed, stream::DRAG_SWEEP), workers, |_| {})?;
        points.push(SweepPoint { x, report });
    }
    Ok(SweepCurve { variable: "drag_scale".into(), points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRunTick {
    pub t: f64,
    pub window: usize,
    pub estimate: [f64; OUTPUTS],
    /// Regime weights per group (empty for the linear head).
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRunTrace {
    pub truth: [f64; OUTPUTS],
    pub termination: Termination,
    pub measurement_seed: u64,
    pub ticks: Vec<SampleRunTick>,
}

impl SampleRunTrace {
    /// Largest relative error of each output over ticks with `t > after`.
    pub fn max_relative_error_after(&self, after: f64) -> [f64; OUTPUTS] {
        let mut worst = [0.0f64; OUTPUTS];
        for tick in self.ticks.iter().filter(|k| k.t > after) {
            for ((w, est), truth) in worst.iter_mut().zip(tick.estimate).zip(self.truth) {
                *w = w.max(((est - truth) / truth).abs());
            }
        }
        worst
    }
}

/// Replays one engagement, feeding the window that ends at every radar
/// tick (growing up to K, then sliding).
pub fn sample_run(
    model: &ModelParams,
    engagement: &EngagementConfig,
    sensor: &SensorConfig,
    seed: u64,
    workers: &Workers,
) -> Result<SampleRunTrace> {
    let traj = simulate(engagement)?;
    let measurement_seed = eval_seed(seed, stream::SAMPLE_RUN);
    let (_, features) = observe(&traj, sensor, measurement_seed)?;
    let rows: Vec<_> = features.rows.iter().map(|r| model.norm.normalize_features(r)).collect();
    let ticks = map_indexed(rows.len(), workers, |k| {
        let w = window_ending_at(k, model.input_steps);
        model_forward(model, &rows[w.start()..=w.end]).map(|e| SampleRunTick {
            t: features.times[k],
            window: w.len,
            estimate: e.physical,
            weights: e.weights.unwrap_or_default(),
        })
    });
    Ok(SampleRunTrace {
        truth: [engagement.missile.gain, engagement.missile.tau],
        termination: traj.termination,
        measurement_seed,
        ticks: ticks.into_iter().collect::<pnid_core::Result<Vec<_>>>()?,
    })
}
