//! Discrete radar measurements of range and LOS angle, LOS-rate estimation,
//! and assembly of the six-component feature vector
//! `[R, q, q_dot, V_A, theta_A, a_A]`.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, Error, Result};
use crate::math;
use crate::rng;
use crate::sim::Trajectory;

/// Number of entries in a feature vector.
pub const FEATURES: usize = 6;

/// Feature vector layout, in order.
pub mod feature {
    pub const RANGE: usize = 0;
    pub const LOS: usize = 1;
    pub const LOS_RATE: usize = 2;
    pub const AIRCRAFT_SPEED: usize = 3;
    pub const AIRCRAFT_THETA: usize = 4;
    pub const AIRCRAFT_ACCEL: usize = 5;
    pub const NAMES: [&str; super::FEATURES] = ["R", "q", "q_dot", "V_A", "theta_A", "a_A"];
}

pub type Features = [f64; FEATURES];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Sample index; the timestamp is `tick * period`.
    pub tick: usize,
    pub t: f64,
    pub range: f64,
    pub los: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    pub period: f64,
    pub samples: Vec<Measurement>,
    pub sigma_range: f64,
    pub sigma_los: f64,
    pub seed: u64,
}

impl MeasurementSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn los(&self) -> Vec<f64> {
        self.samples.iter().map(|m| m.los).collect()
    }

    pub fn range(&self) -> Vec<f64> {
        self.samples.iter().map(|m| m.range).collect()
    }
}

/// Number of dense integration steps per measurement period.
pub fn grid_stride(period: f64, dt: f64) -> Result<usize> {
    if !(period > 0.0 && dt > 0.0) {
        return Err(config("measurement period and integration step must be positive"));
    }
    let ratio = period / dt;
    let stride = math::round(ratio);
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio.max(1.0) {
        return Err(config(alloc::format!(
            "measurement period {period} s is not an integer multiple of the integration step {dt} s"
        )));
    }
    Ok(stride as usize)
}

/// Samples the true range and LOS angle every `period` seconds and corrupts
/// them with independent zero-mean Gaussian noise. Draws are ordered
/// `(range, los)` per tick.
pub fn sample_measurements(
    traj: &Trajectory,
    period: f64,
    sigma_range: f64,
    sigma_los: f64,
    seed: u64,
) -> Result<MeasurementSeries> {
    if !(sigma_range >= 0.0 && sigma_los >= 0.0) {
        return Err(config("noise levels must be non-negative"));
    }
    let stride = grid_stride(period, traj.dt)?;
    let mut rng = rng::rng_from_seed(seed);
    let samples = traj
        .states
        .iter()
        .step_by(stride)
        .enumerate()
        .map(|(tick, s)| {
            let nu_r: f64 = StandardNormal.sample(&mut rng);
            let nu_q: f64 = StandardNormal.sample(&mut rng);
            Measurement {
                tick,
                t: tick as f64 * period,
                range: s.range + sigma_range * nu_r,
                los: s.los + sigma_los * nu_q,
            }
        })
        .collect();
    Ok(MeasurementSeries { period, samples, sigma_range, sigma_los, seed })
}

/// How the LOS rate is differenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RateMode {
    /// Central differences and a centered smoother; reads future samples.
    Offline,
    /// Backward differences and a trailing smoother; the value at tick `k`
    /// reads samples up to `k` (and tick 1 for the very first value).
    Causal,
}

/// Derivative of a uniformly sampled signal followed by a moving-average
/// smoother of `width` samples.
pub fn smoothed_rate(values: &[f64], period: f64, width: usize, mode: RateMode) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: values.len() });
    }
    if width == 0 {
        return Err(config("smoothing width must be at least 1"));
    }
    Ok(match mode {
        RateMode::Offline => math::centered_moving_average(&math::central_difference(values, period), width),
        RateMode::Causal => math::trailing_moving_average(&math::backward_difference(values, period), width),
    })
}

/// LOS-rate estimate from the measured LOS angle.
pub fn estimate_los_rate(series: &MeasurementSeries, width: usize, mode: RateMode) -> Result<Vec<f64>> {
    smoothed_rate(&series.los(), series.period, width, mode)
}

/// Source of the `q_dot` feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LosRateSource {
    /// Exact simulator LOS rate at each tick.
    Exact,
    /// Smoothed differences of the measured LOS angle.
    Differenced { width: usize, mode: RateMode },
}

impl Default for LosRateSource {
    fn default() -> Self {
        LosRateSource::Differenced { width: 5, mode: RateMode::Offline }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub period: f64,
    pub times: Vec<f64>,
    pub rows: Vec<Features>,
}

impl FeatureSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[index]).collect()
    }
}

/// Assembles `[R, q, q_dot, V_A, theta_A, a_A]` per tick from the radar
/// series and the aircraft's own (noise-free) navigation states.
pub fn build_features(series: &MeasurementSeries, traj: &Trajectory, los_rate: LosRateSource) -> Result<FeatureSeries> {
    let stride = grid_stride(series.period, traj.dt)?;
    let expected = traj.len().div_ceil(stride);
    if series.len() != expected {
        return Err(config(alloc::format!(
            "measurement series has {} ticks but the trajectory grid implies {expected}",
            series.len()
        )));
    }
    let v_a = traj.config.aircraft.speed;
    let q_dot = match los_rate {
        LosRateSource::Exact => traj
            .states
            .iter()
            .step_by(stride)
            .map(|s| crate::sim::relative_kinematics(s, v_a).map(|(_, qd)| qd))
            .collect::<Result<Vec<_>>>()?,
        LosRateSource::Differenced { width, mode } => estimate_los_rate(series, width, mode)?,
    };
    let mut times = Vec::with_capacity(series.len());
    let mut rows = Vec::with_capacity(series.len());
    for ((m, s), &qd) in series.samples.iter().zip(traj.states.iter().step_by(stride)).zip(&q_dot) {
        times.push(m.t);
        rows.push([m.range, m.los, qd, v_a, s.theta_a, s.accel_a]);
    }
    Ok(FeatureSeries { period: series.period, times, rows })
}

/// Range-rate estimate from measured ranges (same smoother as the LOS rate).
pub fn estimate_range_rate(series: &MeasurementSeries, width: usize, mode: RateMode) -> Result<Vec<f64>> {
    smoothed_rate(&series.range(), series.period, width, mode)
}
