//! Training and evaluation data: scenario sampling over the engagement
//! parameter box, simulation and sensing of each scenario, window
//! extraction, and min-max normalization fitted on the training split.
//!
//! Latin hypercube sampling is used twice: once over the scenario box to
//! pick engagements, and once (one-dimensional, over end ticks) to pick the
//! windows cut from each engagement.

pub mod lhs;
mod norm;
pub mod window;

pub use lhs::{index_strata, lhs_unit, stratified_indices, LhsDesign};
pub use norm::{denormalize, normalize, NormStats};
pub use window::{extract_windows, window_ending_at, window_length, WindowPolicy, WindowSpec};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::math::MACH;
use crate::nn::{Example, OUTPUTS};
use crate::rng::{self, domain};
use crate::sensing::{self, FeatureSeries, Features, LosRateSource, MeasurementSeries, RateMode};
use crate::sim::{self, EngagementConfig, Termination, Trajectory};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn lerp(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

/// Ranges of the randomized scenario parameters (SI units).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ParamBox {
    /// Initial range, m.
    pub range: Interval,
    /// Initial LOS angle, rad.
    pub los: Interval,
    /// Aircraft speed, m/s.
    pub aircraft_speed: Interval,
    /// Missile launch speed, m/s.
    pub missile_speed: Interval,
    pub gain: Interval,
    /// s
    pub tau: Interval,
    /// Bang-bang phase, s; randomized only when set.
    pub maneuver_phase: Option<Interval>,
}

impl Default for ParamBox {
    fn default() -> Self {
        Self {
            range: Interval::new(6000.0, 8000.0),
            los: Interval::new(0.0, 5.0f64.to_radians()),
            aircraft_speed: Interval::new(0.8 * MACH, 1.0 * MACH),
            missile_speed: Interval::new(2.0 * MACH, 2.5 * MACH),
            gain: Interval::new(2.5, 5.5),
            tau: Interval::new(0.1, 0.4),
            maneuver_phase: None,
        }
    }
}

impl ParamBox {
    pub fn dims(&self) -> usize {
        6 + usize::from(self.maneuver_phase.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = alloc::vec![
            ("range", self.range),
            ("los", self.los),
            ("aircraft_speed", self.aircraft_speed),
            ("missile_speed", self.missile_speed),
            ("gain", self.gain),
            ("tau", self.tau),
        ];
        if let Some(p) = self.maneuver_phase {
            all.push(("maneuver_phase", p));
        }
        for (name, iv) in all {
            if !(iv.max > iv.min) {
                return Err(config(format!("parameter box range `{name}` needs max > min")));
            }
        }
        Ok(())
    }

    /// Maps a point of the unit cube onto the box.
    pub fn scenario(&self, unit: &[f64]) -> Scenario {
        Scenario {
            r0: self.range.lerp(unit[0]),
            q0: self.los.lerp(unit[1]),
            aircraft_speed: self.aircraft_speed.lerp(unit[2]),
            missile_speed: self.missile_speed.lerp(unit[3]),
            gain: self.gain.lerp(unit[4]),
            tau: self.tau.lerp(unit[5]),
            maneuver_phase: self.maneuver_phase.map(|p| p.lerp(unit[6])),
        }
    }
}

/// One draw from the parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Scenario {
    pub r0: f64,
    pub q0: f64,
    pub aircraft_speed: f64,
    pub missile_speed: f64,
    pub gain: f64,
    pub tau: f64,
    pub maneuver_phase: Option<f64>,
}

impl Scenario {
    /// `base` with this scenario's randomized fields substituted.
    pub fn engagement(&self, base: &EngagementConfig) -> EngagementConfig {
        let mut cfg = base.clone();
        cfg.r0 = self.r0;
        cfg.q0 = self.q0;
        cfg.aircraft.speed = self.aircraft_speed;
        cfg.missile.speed0 = self.missile_speed;
        cfg.missile.gain = self.gain;
        cfg.missile.tau = self.tau;
        if let Some(p) = self.maneuver_phase {
            cfg.aircraft.maneuver_phase = p;
        }
        cfg
    }

    pub fn label(&self) -> [f64; OUTPUTS] {
        [self.gain, self.tau]
    }
}

/// Radar model used to turn trajectories into features.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SensorConfig {
    /// Measurement period, s.
    pub period: f64,
    /// When off, measurements are exact and `q_dot` is the simulator's.
    pub noise: bool,
    /// m
    pub sigma_range: f64,
    /// rad
    pub sigma_los: f64,
    /// Moving-average width of the LOS-rate estimate, ticks.
    pub rate_width: usize,
    pub rate_mode: RateMode,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            period: 0.01,
            noise: true,
            sigma_range: 5.0,
            sigma_los: 1e-3,
            rate_width: 5,
            rate_mode: RateMode::Offline,
        }
    }
}

impl SensorConfig {
    pub fn noise_free(self) -> Self {
        Self { noise: false, ..self }
    }
}

/// Samples and featurizes a trajectory with the given sensor.
pub fn observe(traj: &Trajectory, sensor: &SensorConfig, seed: u64) -> Result<(MeasurementSeries, FeatureSeries)> {
    let (sr, sq, source) = if sensor.noise {
        (
            sensor.sigma_range,
            sensor.sigma_los,
            LosRateSource::Differenced { width: sensor.rate_width, mode: sensor.rate_mode },
        )
    } else {
        (0.0, 0.0, LosRateSource::Exact)
    };
    let series = sensing::sample_measurements(traj, sensor.period, sr, sq, seed)?;
    let features = sensing::build_features(&series, traj, source)?;
    Ok((series, features))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub param_box: ParamBox,
    /// Fixed (non-randomized) engagement parameters.
    pub base: EngagementConfig,
    pub sensor: SensorConfig,
    pub trajectories: usize,
    pub windows_per_trajectory: usize,
    /// Preset input step `K`.
    pub input_steps: usize,
    /// Shortest window kept, ticks.
    pub min_window: usize,
    /// Fraction of trajectories (not windows) in the training split.
    pub train_fraction: f64,
    pub seed: u64,
    /// Resampling attempts per trajectory slot after the first failure.
    pub max_retries: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            param_box: ParamBox::default(),
            base: EngagementConfig::default(),
            sensor: SensorConfig::default().noise_free(),
            trajectories: 200,
            windows_per_trajectory: 20,
            input_steps: 100,
            min_window: 10,
            train_fraction: 0.9,
            seed: 1,
            max_retries: 10,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        self.param_box.validate()?;
        self.base.validate()?;
        if self.trajectories == 0 || self.windows_per_trajectory == 0 || self.input_steps == 0 {
            return Err(config("trajectory count, windows per trajectory and K must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(config("train fraction must be in (0, 1]"));
        }
        sensing::grid_stride(self.sensor.period, self.base.dt)?;
        Ok(())
    }

    /// Number of trajectory slots in the training split.
    pub fn train_slots(&self) -> usize {
        let n = crate::math::round(self.train_fraction * self.trajectories as f64) as usize;
        n.clamp(1, self.trajectories)
    }

    /// Stable identifier of a trajectory slot.
    pub fn trajectory_id(&self, slot: usize) -> u64 {
        rng::derive_seed(self.seed, domain::SCENARIO, slot as u64)
    }
}

/// A window before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub trajectory: u64,
    pub end_tick: usize,
    pub window: Vec<Features>,
    pub label: [f64; OUTPUTS],
}

/// Outcome of one trajectory slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub slot: usize,
    pub id: u64,
    pub scenario: Scenario,
    /// Attempts used, including the successful one.
    pub attempts: usize,
    /// Why earlier attempts were rejected.
    pub rejected: Vec<String>,
    pub termination: Termination,
    pub ticks: usize,
    pub samples: Vec<RawSample>,
}

/// Pass-one design over the scenario box.
pub fn scenario_design(cfg: &DatasetConfig) -> LhsDesign {
    let mut r = rng::derived_rng(cfg.seed, domain::SCENARIO, u64::MAX);
    LhsDesign::new(cfg.trajectories, cfg.param_box.dims(), &mut r)
}

/// Simulates, senses and windows one slot, redrawing the jitter inside the
/// slot's strata when an attempt fails (timeout, simulation error, or too
/// few ticks for a window).
pub fn run_slot(cfg: &DatasetConfig, design: &LhsDesign, slot: usize) -> Result<TrajectoryRecord> {
    run_slot_with(cfg, design, slot, |_| {})
}

/// [`run_slot`] with a hook that edits each drawn scenario before it is
/// simulated (used to pin parameters for grid evaluation).
pub fn run_slot_with(
    cfg: &DatasetConfig,
    design: &LhsDesign,
    slot: usize,
    adjust: impl Fn(&mut Scenario),
) -> Result<TrajectoryRecord> {
    let id = cfg.trajectory_id(slot);
    let mut rejected = Vec::new();
    for attempt in 0..=cfg.max_retries {
        let attempt_seed = rng::derive_seed(
            rng::derive_seed(cfg.seed, domain::SCENARIO_JITTER, slot as u64),
            domain::SCENARIO_JITTER,
            attempt as u64,
        );
        let mut jitter = rng::rng_from_seed(attempt_seed);
        let mut scenario = cfg.param_box.scenario(&design.point(slot, &mut jitter));
        adjust(&mut scenario);
        let engagement = scenario.engagement(&cfg.base);
        let traj = match sim::simulate(&engagement) {
            Ok(t) if t.termination == Termination::Timeout => {
                rejected.push(format!("attempt {attempt}: timed out at {} s", t.flight_time()));
                continue;
            }
            Ok(t) => t,
            Err(e) => {
                rejected.push(format!("attempt {attempt}: {e}"));
                continue;
            }
        };
        let meas_seed = rng::derive_seed(attempt_seed, domain::MEASUREMENT, 0);
        let (_, features) = observe(&traj, &cfg.sensor, meas_seed)?;
        let mut wrng = rng::derived_rng(attempt_seed, domain::WINDOWS, 0);
        let policy = WindowPolicy::Stratified { count: cfg.windows_per_trajectory, min_len: cfg.min_window };
        let specs = match extract_windows(features.len(), cfg.input_steps, policy, &mut wrng) {
            Ok(s) => s,
            Err(e @ Error::InsufficientData { .. }) => {
                rejected.push(format!("attempt {attempt}: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let label = scenario.label();
        let samples = specs
            .iter()
            .map(|w| RawSample { trajectory: id, end_tick: w.end, window: w.slice(&features).to_vec(), label })
            .collect();
        return Ok(TrajectoryRecord {
            slot,
            id,
            scenario,
            attempts: attempt + 1,
            rejected,
            termination: traj.termination,
            ticks: features.len(),
            samples,
        });
    }
    Err(config(format!(
        "trajectory slot {slot} failed after {} attempts: {}",
        cfg.max_retries + 1,
        rejected.join("; ")
    )))
}

/// A normalized window with its normalized label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub trajectory: u64,
    pub end_tick: usize,
    pub window: Vec<Features>,
    pub label: [f64; OUTPUTS],
}

impl Sample {
    pub fn example(&self) -> Example<'_> {
        Example { window: &self.window, target: self.label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryInfo {
    pub slot: usize,
    pub id: u64,
    pub split: Split,
    pub scenario: Scenario,
    pub attempts: usize,
    pub rejected: Vec<String>,
    pub termination: Termination,
    pub ticks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub norm: NormStats,
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub trajectories: Vec<TrajectoryInfo>,
}

impl Dataset {
    pub fn train_ids(&self) -> Vec<u64> {
        self.ids(Split::Train)
    }

    pub fn validation_ids(&self) -> Vec<u64> {
        self.ids(Split::Validation)
    }

    fn ids(&self, split: Split) -> Vec<u64> {
        self.trajectories.iter().filter(|t| t.split == split).map(|t| t.id).collect()
    }
}

/// Splits by trajectory slot, fits normalization on the training split and
/// normalizes every sample. `records` must be in slot order.
pub fn assemble(cfg: &DatasetConfig, records: Vec<TrajectoryRecord>) -> Result<Dataset> {
    let n_train = cfg.train_slots();
    if records.iter().enumerate().any(|(i, r)| r.slot != i) {
        return Err(config("trajectory records are not in slot order"));
    }
    let norm = {
        let train = records.iter().filter(|r| r.slot < n_train).flat_map(|r| r.samples.iter());
        let rows = train.clone().flat_map(|s| s.window.iter());
        let labels = train.map(|s| &s.label);
        NormStats::fit(rows, labels)?
    };
    let mut dataset = Dataset { norm, train: Vec::new(), validation: Vec::new(), trajectories: Vec::new() };
    for r in records {
        let split = if r.slot < n_train { Split::Train } else { Split::Validation };
        for s in r.samples {
            let sample = Sample {
                trajectory: s.trajectory,
                end_tick: s.end_tick,
                window: s.window.iter().map(|row| dataset.norm.normalize_features(row)).collect(),
                label: dataset.norm.normalize_labels(&s.label),
            };
            match split {
                Split::Train => dataset.train.push(sample),
                Split::Validation => dataset.validation.push(sample),
            }
        }
        dataset.trajectories.push(TrajectoryInfo {
            slot: r.slot,
            id: r.id,
            split,
            scenario: r.scenario,
            attempts: r.attempts,
            rejected: r.rejected,
            termination: r.termination,
            ticks: r.ticks,
        });
    }
    Ok(dataset)
}

/// Sequential end-to-end dataset generation.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    let design = scenario_design(cfg);
    let records = (0..cfg.trajectories).map(|slot| run_slot(cfg, &design, slot)).collect::<Result<Vec<_>>>()?;
    assemble(cfg, records)
}
