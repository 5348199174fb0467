use std::f64::consts::{FRAC_PI_2, PI};

use pnid_core::sim::{
    bang_bang_command, initial_state, integrate_step, lag_update, pn_command, relative_kinematics, simulate,
    speed_derivative, AircraftParams, DragTable, EngagementConfig, EngagementState, MissileParams, Termination,
};
use pnid_core::Error;

const G: f64 = 9.8;

fn state(range: f64, los: f64, theta_a: f64, theta_m: f64, speed_m: f64) -> EngagementState {
    EngagementState { range, los, theta_a, theta_m, speed_m, ..EngagementState::default() }
}

#[test]
fn head_on_and_pure_rotation_kinematics() {
    let (v_r, q_dot) = relative_kinematics(&state(7000.0, 0.0, 0.0, 0.0, 700.0), 300.0).unwrap();
    assert_eq!(v_r, -1000.0);
    assert_eq!(q_dot, 0.0);

    let (v_r, q_dot) = relative_kinematics(&state(7000.0, 0.0, 0.0, FRAC_PI_2, 700.0), 0.0).unwrap();
    assert!(v_r.abs() < 1e-12);
    assert!((q_dot + 0.1).abs() < 1e-15);
}

#[test]
fn kinematics_reject_non_positive_range() {
    for r in [0.0, -1.0, f64::NAN] {
        assert!(matches!(
            relative_kinematics(&state(r, 0.0, 0.0, 0.0, 700.0), 300.0),
            Err(Error::DegenerateGeometry { .. })
        ));
    }
}

#[test]
fn pn_command_substitution() {
    assert_eq!(pn_command(4.0, -1000.0, 0.0), 0.0);
    assert!((pn_command(4.0, -1000.0, 0.01) - 40.0).abs() < 1e-12);
    assert!((pn_command(5.0, -800.0, -0.02) + 80.0).abs() < 1e-12);
}

#[test]
fn lag_update_against_exponential() {
    assert_eq!(lag_update(10.0, 10.0, 0.3, 0.01), 10.0);
    // One RK4 step reproduces the exponential up to the first omitted Taylor
    // term, |a - a_c| x^5 / 5! with x = dt / tau.
    for (a, a_c, tau, dt) in [(0.0, 10.0, 0.2, 0.2), (10.0, 0.0, 0.3, 0.3), (-3.0, 7.0, 0.5, 0.05)] {
        let x: f64 = dt / tau;
        let exact = a_c + (a - a_c) * (-x).exp();
        let bound = (a - a_c).abs() * x.powi(5) / 120.0;
        let got = lag_update(a, a_c, tau, dt);
        assert!((got - exact).abs() <= bound, "{got} vs {exact} (bound {bound})");
    }
}

#[test]
fn lag_reaches_command_after_ten_time_constants() {
    let (tau, dt, a_c) = (0.3, 1e-3, 55.0);
    let mut a = 0.0;
    for _ in 0..(10.0 * tau / dt) as usize {
        a = lag_update(a, a_c, tau, dt);
    }
    assert!((a - a_c).abs() < 1e-3 * a_c);
}

#[test]
fn bang_bang_square_wave() {
    let p = AircraftParams::default();
    assert!((bang_bang_command(0.0, &p) - 78.4).abs() < 1e-12);
    assert!((bang_bang_command(4.1, &p) + 78.4).abs() < 1e-12);
    assert!((bang_bang_command(8.05, &p) - 78.4).abs() < 1e-12);
    assert!((bang_bang_command(3.999, &p) - 78.4).abs() < 1e-12);
    assert!((bang_bang_command(4.0, &p) + 78.4).abs() < 1e-12);
    let shifted = AircraftParams { maneuver_phase: 1.0, ..p.clone() };
    assert!((bang_bang_command(0.5, &shifted) + 78.4).abs() < 1e-12);
    assert!((bang_bang_command(1.5, &shifted) - 78.4).abs() < 1e-12);
    let calm = AircraftParams { maneuver_amp: 0.0, ..p };
    assert_eq!(bang_bang_command(2.0, &calm), 0.0);
}

fn flat_missile(cd: f64) -> MissileParams {
    MissileParams { drag: DragTable::flat(cd), ..MissileParams::default() }
}

#[test]
fn drag_hand_arithmetic() {
    // 0.5 * 1.225 * 680^2 * 0.3 * 0.101 = 8581.566 N on 100 kg.
    let m = flat_missile(0.3);
    let dv = speed_derivative(680.0, 0.0, &m, 1.225);
    assert!((dv + 85.81566).abs() < 1e-9, "{dv}");
    let doubled = MissileParams { drag_scale: 2.0, ..m.clone() };
    assert!((speed_derivative(680.0, 0.0, &doubled, 1.225) - 2.0 * dv).abs() < 1e-12);
    let balanced = MissileParams { thrust: -dv * m.mass, ..m };
    assert!(speed_derivative(680.0, 0.0, &balanced, 1.225).abs() < 1e-12);
}

#[test]
fn drag_table_interpolates_and_clamps() {
    let t = DragTable::default();
    assert_eq!(t.coefficient(0.1), 0.30);
    assert_eq!(t.coefficient(9.0), 0.32);
    assert!((t.coefficient(1.0) - 0.45).abs() < 1e-12);
    assert!((t.coefficient(2.5) - 0.35).abs() < 1e-12);
    assert!(DragTable::new(vec![(1.0, 0.3), (1.0, 0.4)]).is_err());
    assert!(DragTable::new(vec![]).is_err());
}

#[test]
fn level_flight_speed_matches_quadratic_drag_solution() {
    // theta_m stays 0 when the lateral acceleration exactly cancels gravity,
    // so the speed obeys dV/dt = -k V^2 with k = rho Cd S / (2 m).
    let cfg = EngagementConfig { missile: flat_missile(0.35), r0: 50_000.0, ..EngagementConfig::default() };
    let k = cfg.air_density * 0.35 * cfg.missile.ref_area / (2.0 * cfg.missile.mass);
    let mut s = initial_state(&cfg).unwrap();
    s.accel_m = G;
    let v0 = s.speed_m;
    let dt = 1e-3;
    for step in 1..=3000 {
        s.cmd_m = G;
        s = integrate_step(&s, &cfg.missile, &cfg.aircraft, dt, cfg.air_density).unwrap();
        let t = step as f64 * dt;
        let exact = v0 / (1.0 + k * v0 * t);
        assert!(s.theta_m.abs() < 1e-12);
        assert!((s.speed_m - exact).abs() / exact < 1e-5, "t={t}: {} vs {exact}", s.speed_m);
    }
}

#[test]
fn equilibrium_state_is_a_fixed_point() {
    // Both vehicles climb vertically side by side at the same speed, the
    // missile's thrust cancelling drag plus weight.
    let v = 600.0;
    let mut missile = flat_missile(0.3);
    missile.thrust = 0.5 * 1.225 * v * v * 0.3 * missile.ref_area + missile.mass * G;
    missile.speed0 = v;
    let aircraft = AircraftParams { speed: v, maneuver_amp: 0.0, ..AircraftParams::default() };
    let s0 = EngagementState {
        range: 3000.0,
        los: 0.3,
        theta_a: FRAC_PI_2,
        theta_m: FRAC_PI_2,
        speed_m: v,
        ..EngagementState::default()
    };
    let s1 = integrate_step(&s0, &missile, &aircraft, 1e-3, 1.225).unwrap();
    let pairs = [
        (s0.range, s1.range),
        (s0.los, s1.los),
        (s0.theta_a, s1.theta_a),
        (s0.theta_m, s1.theta_m),
        (s0.speed_m, s1.speed_m),
        (s0.accel_a, s1.accel_a),
        (s0.accel_m, s1.accel_m),
    ];
    for (a, b) in pairs {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} -> {b}");
    }
    assert!((s1.t - 1e-3).abs() < 1e-18);
}

#[test]
fn vertical_tail_chase_keeps_missile_command_zero() {
    let cfg = EngagementConfig {
        aircraft: AircraftParams { maneuver_amp: 0.0, theta0: FRAC_PI_2, ..AircraftParams::default() },
        missile: MissileParams { theta0: FRAC_PI_2, ..MissileParams::default() },
        q0: FRAC_PI_2,
        r0: 3000.0,
        ..EngagementConfig::default()
    };
    let traj = simulate(&cfg).unwrap();
    assert!(traj.len() > 100);
    for s in &traj.states {
        assert!(s.cmd_m.abs() < 1e-9, "t={} cmd={}", s.t, s.cmd_m);
    }
}

#[test]
fn unperturbed_head_on_is_a_near_collision() {
    let cfg = EngagementConfig {
        aircraft: AircraftParams { maneuver_amp: 0.0, ..AircraftParams::default() },
        ..EngagementConfig::default()
    };
    let traj = simulate(&cfg).unwrap();
    assert_eq!(traj.termination, Termination::Intercept);
    assert!(traj.miss_distance() < 0.5, "miss {}", traj.miss_distance());
    let max_rate = traj.kinematics().unwrap().iter().map(|k| k.1.abs()).fold(0.0, f64::max);
    assert!(max_rate < 5e-3, "max LOS rate {max_rate}");
}

#[test]
fn simulated_rates_match_finite_differences() {
    let cfg = EngagementConfig { dt: 1e-4, q0: 0.05, ..EngagementConfig::default() };
    let traj = simulate(&cfg).unwrap();
    let kin = traj.kinematics().unwrap();
    let h = 2.0 * cfg.dt;
    let mut checked = 0;
    for k in (1..traj.len() - 1).step_by(997) {
        let (a, b) = (&traj.states[k - 1], &traj.states[k + 1]);
        let r_dot = (b.range - a.range) / h;
        let q_dot = (b.los - a.los) / h;
        let (v_r, qd) = kin[k];
        assert!((r_dot - v_r).abs() / v_r.abs() < 1e-4, "t={}: {r_dot} vs {v_r}", traj.states[k].t);
        if qd.abs() > 1e-3 {
            assert!((q_dot - qd).abs() / qd.abs() < 1e-4, "t={}: {q_dot} vs {qd}", traj.states[k].t);
            checked += 1;
        }
    }
    assert!(checked > 20);
}

fn as_vector(s: &EngagementState) -> [f64; 7] {
    [s.range, s.los, s.theta_a, s.theta_m, s.speed_m, s.accel_a, s.accel_m]
}

fn held_propagation(dt: f64) -> [f64; 7] {
    let cfg = EngagementConfig::default();
    let mut s = initial_state(&cfg).unwrap();
    let (cmd_a, cmd_m) = (s.cmd_a, 40.0);
    for _ in 0..(1.0 / dt).round() as usize {
        s.cmd_a = cmd_a;
        s.cmd_m = cmd_m;
        s = integrate_step(&s, &cfg.missile, &cfg.aircraft, dt, cfg.air_density).unwrap();
    }
    as_vector(&s)
}

#[test]
fn halving_the_step_barely_moves_a_one_second_propagation() {
    let (a, b) = (held_propagation(1e-3), held_propagation(5e-4));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() / y.abs().max(1.0) < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn closed_loop_converges_at_least_linearly() {
    // Commands are held over each step, so the PN loop itself is first order.
    let run = |dt: f64| {
        let cfg = EngagementConfig {
            dt,
            limits: pnid_core::sim::Limits { r_min: 50.0, t_max: 1.0 },
            ..EngagementConfig::default()
        };
        let traj = simulate(&cfg).unwrap();
        as_vector(&traj.states[(1.0 / dt).round() as usize])
    };
    let dist = |a: [f64; 7], b: [f64; 7]| a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let (c, m, f) = (run(2e-3), run(1e-3), run(5e-4));
    let ratio = dist(c, m) / dist(m, f);
    assert!(ratio > 1.8, "step-halving ratio {ratio}");
    assert!(dist(m, f) / f[0] < 1e-5);
}

#[test]
fn trajectory_invariants_and_wiring() {
    let cfg = EngagementConfig::default();
    let traj = simulate(&cfg).unwrap();
    let v_a = cfg.aircraft.speed;
    for (k, s) in traj.states.iter().enumerate() {
        assert_eq!(s.t, k as f64 * cfg.dt);
        assert!(s.range > 0.0 && s.speed_m > 0.0);
        let (v_r, q_dot) = relative_kinematics(s, v_a).unwrap();
        assert_eq!(s.cmd_m, pn_command(cfg.missile.gain, v_r, q_dot));
        assert_eq!(s.cmd_a, bang_bang_command(s.t, &cfg.aircraft));
        let last = k + 1 == traj.len();
        let stops = s.range < cfg.limits.r_min || v_r >= 0.0 || s.t > cfg.limits.t_max;
        assert_eq!(stops, last, "termination predicate at step {k}");
    }
}

#[test]
fn sample_run_regression() {
    let traj = simulate(&EngagementConfig::default()).unwrap();
    assert_eq!(traj.termination, Termination::Intercept);
    // Recorded from this simulator; guards against silent behavior changes.
    assert!((traj.flight_time() - 10.434).abs() < 1e-9, "{}", traj.flight_time());
    assert!((traj.miss_distance() - 0.0716).abs() < 1e-3, "{}", traj.miss_distance());
    assert_eq!(traj, simulate(&EngagementConfig::default()).unwrap());
}

#[test]
fn opening_geometry_terminates_immediately() {
    let cfg = EngagementConfig {
        aircraft: AircraftParams { theta0: PI, speed: 700.0, ..AircraftParams::default() },
        missile: MissileParams { speed0: 500.0, ..MissileParams::default() },
        ..EngagementConfig::default()
    };
    let traj = simulate(&cfg).unwrap();
    assert_eq!(traj.termination, Termination::Opening);
    assert_eq!(traj.len(), 1);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = EngagementConfig::default();
    let mut bad = vec![];
    let mut c = base.clone();
    c.missile.gain = 0.0;
    bad.push(c);
    let mut c = base.clone();
    c.missile.tau = -0.1;
    bad.push(c);
    let mut c = base.clone();
    c.dt = 0.0;
    bad.push(c);
    let mut c = base.clone();
    c.r0 = -5.0;
    bad.push(c);
    let mut c = base;
    c.aircraft.maneuver_freq = 0.0;
    bad.push(c);
    for c in bad {
        assert!(matches!(simulate(&c), Err(Error::Config(_))));
    }
}
