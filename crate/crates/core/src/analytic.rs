//! Closed-form inversion of the engagement kinematics.
//!
//! From aircraft-side data (`R, q, q_dot, V_R` and the aircraft's own
//! `V_A, theta_A`) the missile velocity components along and across the LOS
//! follow directly, which yields the missile flight-path angle, speed and
//! lateral acceleration. With the acceleration history, PN with a first-order
//! lag is linear in `(N, tau)`:
//!
//! ```text
//! a_t = N * (V_c * q_dot)_t - tau * (a_t - a_{t-1}) / T_p
//! ```
//!
//! which is solved over all usable instants by least squares. On clean data
//! this recovers the parameters; on realistic radar noise it does not, which
//! is what the learned identifier is for.

use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::math::{self, G};
use crate::sensing::{self, feature, FeatureSeries, RateMode};

/// Minimum `hypot(f1, f2)` (m/s) for a point to count as non-degenerate.
pub const DEGENERATE_SPEED: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionPoint {
    pub t: f64,
    /// Missile velocity component along the LOS, m/s.
    pub f1: f64,
    /// Missile velocity component across the LOS, m/s.
    pub f2: f64,
    pub theta_m: f64,
    pub speed_m: f64,
    /// Lateral acceleration, m/s².
    pub accel_m: f64,
    /// Lateral acceleration in g (`V theta_dot / g + cos theta`).
    pub accel_m_g: f64,
    /// False for degenerate geometry and for edge points whose derivative is
    /// one-sided; such points are skipped by [`solve_n_tau`].
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSolution {
    pub gain: f64,
    pub tau: f64,
    /// RMS residual of the linear system, m/s².
    pub residual: f64,
    pub instants: usize,
}

/// Missile velocity components `(f1, f2)` along and across the LOS.
pub fn velocity_components(range: f64, los: f64, los_rate: f64, v_r: f64, v_a: f64, theta_a: f64) -> (f64, f64) {
    let f1 = -v_r - v_a * math::cos(theta_a + los);
    let f2 = -los_rate * range + v_a * math::sin(theta_a + los);
    (f1, f2)
}

/// Reconstructs the missile state at every tick. `v_r` is the range rate per
/// tick; the flight-path-angle rate is differenced with a centered smoother of
/// `rate_width` ticks.
pub fn reconstruct(features: &FeatureSeries, v_r: &[f64], rate_width: usize) -> Result<Vec<ReconstructionPoint>> {
    let n = features.len();
    if v_r.len() != n {
        return Err(config("range-rate series does not match the feature grid"));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut points: Vec<ReconstructionPoint> = features
        .rows
        .iter()
        .zip(&features.times)
        .zip(v_r)
        .map(|((row, &t), &vr)| {
            let q = row[feature::LOS];
            let (f1, f2) = velocity_components(
                row[feature::RANGE],
                q,
                row[feature::LOS_RATE],
                vr,
                row[feature::AIRCRAFT_SPEED],
                row[feature::AIRCRAFT_THETA],
            );
            let valid = math::hypot(f1, f2) > DEGENERATE_SPEED;
            let theta_m = math::atan2(f2, f1) + q;
            let speed_m = f1 * math::cos(theta_m - q) + f2 * math::sin(theta_m - q);
            ReconstructionPoint { t, f1, f2, theta_m, speed_m, accel_m: 0.0, accel_m_g: 0.0, valid }
        })
        .collect();

    let theta: Vec<f64> = points.iter().map(|p| p.theta_m).collect();
    let theta_rate = sensing::smoothed_rate(&theta, features.period, rate_width, RateMode::Offline)?;
    let reach = rate_width / 2 + 1;
    let degenerate: Vec<usize> = (0..n).filter(|&k| !points[k].valid).collect();
    for (k, p) in points.iter_mut().enumerate() {
        p.accel_m = p.speed_m * theta_rate[k] + G * math::cos(p.theta_m);
        p.accel_m_g = p.accel_m / G;
        let edge = k < reach || k + reach >= n;
        let near_degenerate = degenerate.iter().any(|&d| d.abs_diff(k) <= reach);
        if edge || near_degenerate {
            p.valid = false;
        }
    }
    Ok(points)
}

/// Least-squares fit of `a_t = N u_t - tau (a_t - a_{t-1}) / T_p` where
/// `u = V_c q_dot`. Instant `t` is used when `usable[t]` and `usable[t-1]`.
pub fn fit_gain_lag(accel: &[f64], drive: &[f64], usable: &[bool], period: f64) -> Result<ParamSolution> {
    if accel.len() != drive.len() || accel.len() != usable.len() {
        return Err(config("acceleration, drive and mask lengths differ"));
    }
    if !(period > 0.0) {
        return Err(config("sample period must be positive"));
    }
    let mut col_u = Vec::new();
    let mut col_d = Vec::new();
    let mut rhs = Vec::new();
    for t in 1..accel.len() {
        if usable[t] && usable[t - 1] {
            col_u.push(drive[t]);
            col_d.push(-(accel[t] - accel[t - 1]) / period);
            rhs.push(accel[t]);
        }
    }
    let m = rhs.len();
    if m < 2 {
        return Err(Error::InsufficientData { needed: 2, got: m });
    }
    let (gain, tau) = least_squares_2(&col_u, &col_d, &rhs)?;
    let ss: f64 = (0..m)
        .map(|i| {
            let r = rhs[i] - gain * col_u[i] - tau * col_d[i];
            r * r
        })
        .sum();
    Ok(ParamSolution { gain, tau, residual: math::sqrt(ss / m as f64), instants: m })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-column least squares by modified Gram-Schmidt.
fn least_squares_2(a: &[f64], b: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let na = math::sqrt(dot(a, a));
    let nb = math::sqrt(dot(b, b));
    if !(na > 0.0) || !(nb > 0.0) {
        return Err(Error::Unidentifiable("a regressor column is identically zero".into()));
    }
    let q1: Vec<f64> = a.iter().map(|x| x / na).collect();
    let r12 = dot(&q1, b);
    let mut v: Vec<f64> = b.iter().zip(&q1).map(|(x, q)| x - r12 * q).collect();
    let r22 = math::sqrt(dot(&v, &v));
    if !(r22 > 1e-10 * nb) {
        return Err(Error::Unidentifiable("regressor columns are collinear".into()));
    }
    v.iter_mut().for_each(|x| *x /= r22);
    let c1 = dot(&q1, y);
    let c2 = dot(&v, y);
    let tau = c2 / r22;
    let gain = (c1 - r12 * tau) / na;
    Ok((gain, tau))
}

/// Solves for `(N, tau)` from reconstructed accelerations, closing speed
/// `v_c = -V_R` and LOS rate per tick.
pub fn solve_n_tau(points: &[ReconstructionPoint], v_c: &[f64], q_dot: &[f64], period: f64) -> Result<ParamSolution> {
    if v_c.len() != points.len() || q_dot.len() != points.len() {
        return Err(config("closing speed / LOS rate series do not match the reconstruction"));
    }
    let accel: Vec<f64> = points.iter().map(|p| p.accel_m).collect();
    let drive: Vec<f64> = v_c.iter().zip(q_dot).map(|(v, q)| v * q).collect();
    let usable: Vec<bool> = points.iter().map(|p| p.valid).collect();
    fit_gain_lag(&accel, &drive, &usable, period)
}

/// Full analytic pipeline on a feature series with a known range-rate series.
pub fn identify(
    features: &FeatureSeries,
    v_r: &[f64],
    rate_width: usize,
) -> Result<(Vec<ReconstructionPoint>, ParamSolution)> {
    let points = reconstruct(features, v_r, rate_width)?;
    let v_c: Vec<f64> = v_r.iter().map(|v| -v).collect();
    let q_dot = features.column(feature::LOS_RATE);
    let solution = solve_n_tau(&points, &v_c, &q_dot, features.period)?;
    Ok((points, solution))
}
