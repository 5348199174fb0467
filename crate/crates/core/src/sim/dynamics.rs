use crate::error::{Error, Result};
use crate::math::{self, G, MACH};

use super::{AircraftParams, EngagementState, MissileParams};

/// Range rate `V_R` (negative while closing) and LOS rate `q_dot`.
pub fn relative_kinematics(state: &EngagementState, v_a: f64) -> Result<(f64, f64)> {
    let range = state.range;
    if !(range > 0.0) {
        return Err(Error::DegenerateGeometry { range });
    }
    Ok(rates(range, state.los, state.theta_a, state.theta_m, state.speed_m, v_a))
}

#[inline]
fn rates(range: f64, q: f64, theta_a: f64, theta_m: f64, v_m: f64, v_a: f64) -> (f64, f64) {
    let (sa, ca) = (math::sin(theta_a + q), math::cos(theta_a + q));
    let (sm, cm) = (math::sin(theta_m - q), math::cos(theta_m - q));
    let v_r = -(v_a * ca + v_m * cm);
    let q_dot = (v_a * sa - v_m * sm) / range;
    (v_r, q_dot)
}

/// PN acceleration command `N * V_c * q_dot` with closing speed `V_c = -V_R`.
#[inline]
pub fn pn_command(gain: f64, v_r: f64, q_dot: f64) -> f64 {
    gain * (-v_r) * q_dot
}

/// One RK4 step of `a' = (a_c - a) / tau` with the command held.
pub fn lag_update(a: f64, a_c: f64, tau: f64, dt: f64) -> f64 {
    let f = |x: f64| (a_c - x) / tau;
    let k1 = f(a);
    let k2 = f(a + 0.5 * dt * k1);
    let k3 = f(a + 0.5 * dt * k2);
    let k4 = f(a + dt * k3);
    a + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Square-wave evasive command: `+eta*g` for the first half of each period
/// (starting at `maneuver_phase`), `-eta*g` for the second.
pub fn bang_bang_command(t: f64, params: &AircraftParams) -> f64 {
    let amplitude = params.maneuver_amp * G;
    if amplitude == 0.0 {
        return 0.0;
    }
    let period = 1.0 / params.maneuver_freq;
    let d = t - params.maneuver_phase;
    let u = d - period * math::floor(d / period);
    if u < 0.5 * period {
        amplitude
    } else {
        -amplitude
    }
}

/// Drag force in N at speed `v`.
pub fn drag_force(v: f64, params: &MissileParams, rho: f64) -> f64 {
    let cd = params.drag.coefficient(v / MACH) * params.drag_scale;
    0.5 * rho * v * v * cd * params.ref_area
}

/// `dV/dt = (T - D) / m - g sin(theta_m)`.
pub fn speed_derivative(v: f64, theta_m: f64, params: &MissileParams, rho: f64) -> f64 {
    (params.thrust - drag_force(v, params, rho)) / params.mass - G * math::sin(theta_m)
}

/// Recomputes both command channels from the state's own kinematics and time.
pub(crate) fn wire_commands(
    state: &mut EngagementState,
    missile: &MissileParams,
    aircraft: &AircraftParams,
) -> Result<()> {
    let (v_r, q_dot) = relative_kinematics(state, aircraft.speed)?;
    state.cmd_m = pn_command(missile.gain, v_r, q_dot);
    state.cmd_a = bang_bang_command(state.t, aircraft);
    Ok(())
}

const DIM: usize = 7;
type Vector = [f64; DIM];

struct Rhs<'a> {
    missile: &'a MissileParams,
    aircraft: &'a AircraftParams,
    rho: f64,
    cmd_a: f64,
    cmd_m: f64,
}

impl Rhs<'_> {
    // y = [R, q, theta_a, theta_m, V_m, a_a, a_m]
    fn eval(&self, y: &Vector) -> Result<Vector> {
        let [range, q, theta_a, theta_m, v_m, a_a, a_m] = *y;
        if !(range > 0.0) {
            return Err(Error::DegenerateGeometry { range });
        }
        let v_a = self.aircraft.speed;
        let (v_r, q_dot) = rates(range, q, theta_a, theta_m, v_m, v_a);
        Ok([
            v_r,
            q_dot,
            (a_a - G * math::cos(theta_a)) / v_a,
            (a_m - G * math::cos(theta_m)) / v_m,
            speed_derivative(v_m, theta_m, self.missile, self.rho),
            (self.cmd_a - a_a) / self.aircraft.tau,
            (self.cmd_m - a_m) / self.missile.tau,
        ])
    }
}

fn axpy(y: &Vector, h: f64, k: &Vector) -> Vector {
    let mut out = *y;
    for i in 0..DIM {
        out[i] += h * k[i];
    }
    out
}

/// One classical RK4 step of length `dt`. The commands stored in `state` are
/// held over the step; the returned state carries commands recomputed at
/// `t + dt`.
pub fn integrate_step(
    state: &EngagementState,
    missile: &MissileParams,
    aircraft: &AircraftParams,
    dt: f64,
    rho: f64,
) -> Result<EngagementState> {
    let rhs = Rhs { missile, aircraft, rho, cmd_a: state.cmd_a, cmd_m: state.cmd_m };
    let y = [state.range, state.los, state.theta_a, state.theta_m, state.speed_m, state.accel_a, state.accel_m];
    let k1 = rhs.eval(&y)?;
    let k2 = rhs.eval(&axpy(&y, 0.5 * dt, &k1))?;
    let k3 = rhs.eval(&axpy(&y, 0.5 * dt, &k2))?;
    let k4 = rhs.eval(&axpy(&y, dt, &k3))?;
    let mut next = y;
    for i in 0..DIM {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let mut out = EngagementState {
        t: state.t + dt,
        range: next[0],
        los: next[1],
        theta_a: next[2],
        theta_m: next[3],
        speed_m: next[4],
        accel_a: next[5],
        accel_m: next[6],
        cmd_a: 0.0,
        cmd_m: 0.0,
    };
    if out.range > 0.0 {
        wire_commands(&mut out, missile, aircraft)?;
    }
    Ok(out)
}
