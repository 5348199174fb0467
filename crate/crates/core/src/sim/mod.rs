//! Planar missile-vs-aircraft engagement.
//!
//! Geometry: the missile sits at the origin of a vertical plane and the line
//! of sight (LOS) to the aircraft makes the angle `q` with the horizontal
//! axis. The missile flight-path angle `theta_m` is measured from that axis
//! in the usual sense; the aircraft, which starts out flying towards the
//! missile, has its flight-path angle `theta_a` measured from the opposite
//! direction, so `theta_a = theta_m = q = 0` is a head-on geometry and a
//! positive angle is a climb for both vehicles.
//!
//! The missile flies proportional navigation through a first-order lateral
//! lag and loses speed to drag and gravity. The aircraft flies at constant
//! speed with a bang-bang lateral maneuver through its own first-order lag.

mod dynamics;

pub use dynamics::{bang_bang_command, integrate_step, lag_update, pn_command, relative_kinematics, speed_derivative};

use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::math::{self, MACH};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Piecewise-linear drag coefficient as a function of Mach number, clamped at
/// both ends.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>"))]
pub struct DragTable {
    points: Vec<(f64, f64)>,
}

impl DragTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(config("drag table must have at least one point"));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(config("drag table Mach values must be strictly increasing"));
        }
        if points.iter().any(|&(m, cd)| !m.is_finite() || !cd.is_finite() || cd < 0.0) {
            return Err(config("drag table entries must be finite with C_D >= 0"));
        }
        Ok(Self { points })
    }

    /// A single flat coefficient.
    pub fn flat(cd: f64) -> Self {
        Self { points: alloc::vec![(0.0, cd)] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn coefficient(&self, mach: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if mach <= first.0 {
            return first.1;
        }
        if mach >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= mach);
        let (m0, c0) = pts[i - 1];
        let (m1, c1) = pts[i];
        c0 + (c1 - c0) * (mach - m0) / (m1 - m0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for DragTable {
    type Error = Error;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<DragTable> for Vec<(f64, f64)> {
    fn from(t: DragTable) -> Self {
        t.points
    }
}

impl Default for DragTable {
    /// Placeholder transonic drag-rise curve; not measured data.
    fn default() -> Self {
        Self { points: alloc::vec![(0.5, 0.30), (0.9, 0.35), (1.1, 0.55), (1.5, 0.45), (2.0, 0.38), (3.0, 0.32),] }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MissileParams {
    /// PN navigation gain `N`.
    pub gain: f64,
    /// First-order lateral time constant, s.
    pub tau: f64,
    /// Launch speed, m/s.
    pub speed0: f64,
    /// Launch flight-path angle, rad.
    pub theta0: f64,
    /// kg
    pub mass: f64,
    /// N
    pub thrust: f64,
    /// Reference area, m².
    pub ref_area: f64,
    pub drag: DragTable,
    /// Multiplier applied to the tabulated drag coefficient.
    pub drag_scale: f64,
}

impl MissileParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.gain > 0.0, "gain N must be positive"),
            (self.tau > 0.0, "tau_M must be positive"),
            (self.speed0 > 0.0, "launch speed must be positive"),
            (self.mass > 0.0, "mass must be positive"),
            (self.ref_area > 0.0, "reference area must be positive"),
            (self.drag_scale > 0.0, "drag scale must be positive"),
            (self.thrust.is_finite() && self.theta0.is_finite(), "thrust and theta0 must be finite"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(config(msg));
            }
        }
        DragTable::new(self.drag.points.clone()).map(|_| ())
    }
}

impl Default for MissileParams {
    fn default() -> Self {
        Self {
            gain: 4.0,
            tau: 0.25,
            speed0: 2.25 * MACH,
            theta0: 0.0,
            mass: 100.0,
            thrust: 0.0,
            ref_area: 0.101,
            drag: DragTable::default(),
            drag_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AircraftParams {
    /// Constant speed, m/s.
    pub speed: f64,
    /// Initial flight-path angle, rad.
    pub theta0: f64,
    /// First-order lateral time constant, s.
    pub tau: f64,
    /// Bang-bang amplitude in g.
    pub maneuver_amp: f64,
    /// Bang-bang frequency, Hz.
    pub maneuver_freq: f64,
    /// Time offset of the first positive half-period, s.
    pub maneuver_phase: f64,
}

impl AircraftParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.speed > 0.0, "aircraft speed must be positive"),
            (self.tau > 0.0, "tau_A must be positive"),
            (self.maneuver_amp >= 0.0, "maneuver amplitude must be non-negative"),
            (self.maneuver_freq > 0.0, "maneuver frequency must be positive"),
            (self.theta0.is_finite() && self.maneuver_phase.is_finite(), "angles must be finite"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(config(msg));
            }
        }
        Ok(())
    }
}

impl Default for AircraftParams {
    fn default() -> Self {
        Self {
            speed: 0.9 * MACH,
            theta0: 0.0,
            tau: 0.6,
            maneuver_amp: 8.0,
            maneuver_freq: 1.0 / 8.0,
            maneuver_phase: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Limits {
    /// Intercept radius, m.
    pub r_min: f64,
    /// s
    pub t_max: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { r_min: 50.0, t_max: 30.0 }
    }
}

/// Everything [`simulate`] needs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EngagementConfig {
    pub missile: MissileParams,
    pub aircraft: AircraftParams,
    /// Initial range, m.
    pub r0: f64,
    /// Initial LOS angle, rad.
    pub q0: f64,
    /// Integration step, s.
    pub dt: f64,
    pub limits: Limits,
    /// kg/m³
    pub air_density: f64,
}

impl EngagementConfig {
    pub fn validate(&self) -> Result<()> {
        self.missile.validate()?;
        self.aircraft.validate()?;
        if !(self.r0 > 0.0) {
            return Err(config("initial range must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(config("integration step must be positive"));
        }
        if !(self.limits.r_min >= 0.0 && self.limits.t_max > 0.0) {
            return Err(config("limits must satisfy r_min >= 0 and t_max > 0"));
        }
        if !(self.air_density >= 0.0) || !self.q0.is_finite() {
            return Err(config("air density must be non-negative and q0 finite"));
        }
        Ok(())
    }
}

impl Default for EngagementConfig {
    /// The reference sample-run geometry: 7 km head-on, N = 5, tau_M = 0.3 s.
    fn default() -> Self {
        Self {
            missile: MissileParams { gain: 5.0, tau: 0.30, ..MissileParams::default() },
            aircraft: AircraftParams::default(),
            r0: 7000.0,
            q0: 0.0,
            dt: 1e-3,
            limits: Limits::default(),
            air_density: 1.225,
        }
    }
}

/// Engagement state. Lateral accelerations are aerodynamic (gravity enters
/// through the flight-path-angle rate), in m/s².
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EngagementState {
    pub t: f64,
    pub range: f64,
    pub los: f64,
    pub theta_a: f64,
    pub theta_m: f64,
    pub speed_m: f64,
    pub accel_a: f64,
    pub accel_m: f64,
    pub cmd_a: f64,
    pub cmd_m: f64,
}

impl EngagementState {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.range,
            self.los,
            self.theta_a,
            self.theta_m,
            self.speed_m,
            self.accel_a,
            self.accel_m,
            self.cmd_a,
            self.cmd_m,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Termination {
    /// Range dropped below `r_min`.
    Intercept,
    /// Closing speed became non-positive.
    Opening,
    /// `t_max` exceeded.
    Timeout,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Intercept => "intercept",
            Termination::Opening => "opening",
            Termination::Timeout => "timeout",
        }
    }
}

/// Dense, uniformly sampled engagement history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: EngagementConfig,
    pub dt: f64,
    pub states: Vec<EngagementState>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &EngagementState {
        &self.states[self.states.len() - 1]
    }

    pub fn flight_time(&self) -> f64 {
        self.final_state().t
    }

    /// Closest approach. For an intercept this is the zero-effort miss
    /// predicted from the terminal state; otherwise the smallest range seen.
    pub fn miss_distance(&self) -> f64 {
        match self.termination {
            Termination::Intercept => {
                let s = self.final_state();
                match relative_kinematics(s, self.config.aircraft.speed) {
                    Ok((v_r, q_dot)) => {
                        let cross = s.range * q_dot;
                        s.range * cross.abs() / math::hypot(v_r, cross)
                    }
                    Err(_) => 0.0,
                }
            }
            _ => self.states.iter().map(|s| s.range).fold(f64::INFINITY, f64::min),
        }
    }

    /// Range rate and LOS rate at every state.
    pub fn kinematics(&self) -> Result<Vec<(f64, f64)>> {
        self.states.iter().map(|s| relative_kinematics(s, self.config.aircraft.speed)).collect()
    }
}

fn terminated(state: &EngagementState, v_a: f64, limits: &Limits) -> Result<Option<Termination>> {
    if state.range < limits.r_min {
        return Ok(Some(Termination::Intercept));
    }
    let (v_r, _) = relative_kinematics(state, v_a)?;
    if -v_r <= 0.0 {
        return Ok(Some(Termination::Opening));
    }
    if state.t > limits.t_max {
        return Ok(Some(Termination::Timeout));
    }
    Ok(None)
}

/// Launch state with both lateral accelerations at rest and commands wired.
pub fn initial_state(cfg: &EngagementConfig) -> Result<EngagementState> {
    let mut s = EngagementState {
        t: 0.0,
        range: cfg.r0,
        los: cfg.q0,
        theta_a: cfg.aircraft.theta0,
        theta_m: cfg.missile.theta0,
        speed_m: cfg.missile.speed0,
        ..EngagementState::default()
    };
    dynamics::wire_commands(&mut s, &cfg.missile, &cfg.aircraft)?;
    Ok(s)
}

/// Propagates the engagement from launch until intercept, opening geometry,
/// or timeout.
pub fn simulate(cfg: &EngagementConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let v_a = cfg.aircraft.speed;
    let mut state = initial_state(cfg)?;
    let mut states = Vec::with_capacity(((cfg.limits.t_max / cfg.dt) as usize).min(1 << 16) + 1);
    let mut step = 0usize;
    loop {
        if let Some(termination) = terminated(&state, v_a, &cfg.limits)? {
            states.push(state);
            return Ok(Trajectory { config: cfg.clone(), dt: cfg.dt, states, termination });
        }
        states.push(state);
        let mut next = integrate_step(&state, &cfg.missile, &cfg.aircraft, cfg.dt, cfg.air_density)?;
        step += 1;
        // Grid times are computed from the index so the grid stays exactly uniform.
        next.t = step as f64 * cfg.dt;
        if next.range > 0.0 {
            dynamics::wire_commands(&mut next, &cfg.missile, &cfg.aircraft)?;
        }
        if !next.is_finite() || next.speed_m <= 0.0 {
            return Err(Error::NumericalBlowup { step, time: next.t });
        }
        state = next;
    }
}
