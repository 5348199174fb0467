//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. Pass criterion ids (`c1` .. `c10`) as
//! arguments to run a subset.

use std::fs;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use pnid::checkpoint::Checkpoint;
use pnid::config::{Preset, RunConfig, TrainSection};
use pnid::datafile::{write_dataset, MANIFEST, SAMPLES};
use pnid::eval::{drag_sweep_eval, monte_carlo_eval, sample_run, EvalSetup};
use pnid::parallel::{generate_dataset, Workers};
use pnid::train::{compare_training, train, Comparison};
use pnid_core::analytic::{identify, reconstruct};
use pnid_core::dataset::{
    index_strata, lhs_unit, observe, scenario_design, stratified_indices, Dataset, NormStats, ParamBox, SensorConfig,
};
use pnid_core::nn::{
    grad_check, immm_forward, init_model, model_forward, HeadKind, ModelConfig, ParamSubset, RegimeBank,
};
use pnid_core::rng::rng_from_seed;
use pnid_core::sensing::{estimate_range_rate, grid_stride, RateMode};
use pnid_core::sim::{initial_state, integrate_step, simulate, DragTable, EngagementConfig, Trajectory};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

type Outcome = Result<Verdict, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn desk() -> RunConfig {
    RunConfig::preset(Preset::Desk)
}

fn workers() -> Workers {
    Workers::new(desk().workers).unwrap()
}

fn exact_range_rate(traj: &Trajectory, period: f64) -> Result<Vec<f64>, String> {
    let stride = grid_stride(period, traj.config.dt).map_err(err)?;
    Ok(traj.kinematics().map_err(err)?.iter().step_by(stride).map(|k| k.0).collect())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn c1_round_trip() -> Outcome {
    let start = Instant::now();
    let mut cfg = desk().dataset_config();
    cfg.trajectories = 50;
    let design = scenario_design(&cfg);
    let mut rng = rng_from_seed(cfg.seed);
    let sensor = SensorConfig::default().noise_free();
    let (mut worst_theta, mut worst_speed, mut points_checked) = (0.0f64, 0.0f64, 0usize);
    for slot in 0..cfg.trajectories {
        let scenario = cfg.param_box.scenario(&design.point(slot, &mut rng));
        let traj = simulate(&scenario.engagement(&cfg.base)).map_err(err)?;
        let stride = grid_stride(sensor.period, traj.config.dt).map_err(err)?;
        let (_, features) = observe(&traj, &sensor, 0).map_err(err)?;
        let points =
            reconstruct(&features, &exact_range_rate(&traj, sensor.period)?, sensor.rate_width).map_err(err)?;
        for (k, p) in points.iter().enumerate() {
            let s = &traj.states[k * stride];
            worst_theta = worst_theta.max((p.theta_m - s.theta_m).abs());
            worst_speed = worst_speed.max((p.speed_m - s.speed_m).abs());
            points_checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(verdict(
        worst_theta < 1e-9 && worst_speed < 1e-6 && secs < 60.0,
        format!("{points_checked} points; max |dtheta_M| {worst_theta:.2e} rad, max |dV_M| {worst_speed:.2e} m/s; {secs:.1} s"),
    ))
}

fn c2_analytic_oracle() -> Outcome {
    let cfg = EngagementConfig::default();
    let truth = [cfg.missile.gain, cfg.missile.tau];
    let traj = simulate(&cfg).map_err(err)?;
    let clean = SensorConfig::default().noise_free();
    let (_, features) = observe(&traj, &clean, 0).map_err(err)?;
    let (_, sol) = identify(&features, &exact_range_rate(&traj, clean.period)?, clean.rate_width).map_err(err)?;
    let exact_ok = (sol.gain - 5.0).abs() < 0.05 && (sol.tau - 0.30).abs() < 0.01;

    let noisy = SensorConfig::default();
    let (mut n_err, mut tau_err) = (Vec::new(), Vec::new());
    for seed in 0..50 {
        let (series, features) = observe(&traj, &noisy, seed).map_err(err)?;
        let v_r = estimate_range_rate(&series, noisy.rate_width, RateMode::Offline).map_err(err)?;
        let (e_n, e_tau) = match identify(&features, &v_r, noisy.rate_width) {
            Ok((_, s)) => ((s.gain - truth[0]).abs() / truth[0], (s.tau - truth[1]).abs() / truth[1]),
            // A singular solve is as much a failure of direct calculation as a wrong one.
            Err(_) => (f64::INFINITY, f64::INFINITY),
        };
        n_err.push(e_n);
        tau_err.push(e_tau);
    }
    let (med_n, med_tau) = (median(n_err), median(tau_err));
    Ok(verdict(
        exact_ok && med_n > 0.5 && med_tau > 0.5,
        format!(
            "noise-free N {:.4}, tau {:.4}; noisy median relative error N {med_n:.3}, tau {med_tau:.3} over 50 runs",
            sol.gain, sol.tau
        ),
    ))
}

fn unit_norm() -> NormStats {
    NormStats { feature_min: [0.0; 6], feature_max: [1.0; 6], label_min: [2.5, 0.1], label_max: [5.5, 0.4] }
}

fn c3_gradients() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0f64; 2];
    for (h, head) in [HeadKind::Immm, HeadKind::Linear].into_iter().enumerate() {
        let cfg = ModelConfig { input_width: 8, hidden: vec![8, 8], head, regimes_per_group: 5, input_steps: 5 };
        let mut m = init_model(&cfg, &unit_norm(), &mut rng_from_seed(1)).map_err(err)?;
        // Perturb every entry so the zero-initialized head weights are exercised too.
        let mut r = rng_from_seed(2);
        for s in m.network.slices_mut() {
            s.iter_mut().for_each(|v| *v += r.random_range(-0.5..0.5));
        }
        let window: Vec<[f64; 6]> = (0..5).map(|_| std::array::from_fn(|_| r.random_range(-0.1..1.1))).collect();
        let report = grad_check(&m, &window, &[0.3, 0.8], 1e-6, ParamSubset::All).map_err(err)?;
        worst[h] = report.max_rel_error;
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(verdict(
        worst.iter().all(|&e| e < 1e-5) && secs < 10.0,
        format!("max relative error immm {:.2e}, linear {:.2e}; {secs:.2} s", worst[0], worst[1]),
    ))
}

fn c4_immm_invariants() -> Outcome {
    let bounds = [(2.5, 5.5), (0.1, 0.4)];
    let banks: Vec<Vec<f64>> = bounds.iter().map(|&(lo, hi)| RegimeBank::evenly_spaced(lo, hi, 5)).collect();
    let hidden = 16;
    let mut bank = RegimeBank::new(&banks, hidden).map_err(err)?;
    let mut r = rng_from_seed(4);
    for g in &mut bank.groups {
        g.w.data.iter_mut().for_each(|v| *v = r.random_range(-20.0..20.0));
        g.b.iter_mut().for_each(|v| *v = r.random_range(-20.0..20.0));
    }
    let (mut worst_sum, mut outside) = (0.0f64, 0usize);
    for _ in 0..10_000 {
        let h: Vec<f64> = (0..hidden).map(|_| r.random_range(-1.0..1.0)).collect();
        let out = immm_forward(&h, &bank).map_err(err)?;
        for (i, w) in out.weights.iter().enumerate() {
            worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
            if !(bounds[i].0..=bounds[i].1).contains(&out.outputs[i]) {
                outside += 1;
            }
        }
    }
    let model = init_model(&desk().model, &unit_norm(), &mut rng_from_seed(5)).map_err(err)?;
    let window: Vec<[f64; 6]> = (0..40).map(|_| std::array::from_fn(|_| r.random_range(0.0..1.0))).collect();
    let fresh = model_forward(&model, &window).map_err(err)?.physical;
    // The weighted sum of five regimes is exact to within an ulp or two.
    let fresh_ok = (fresh[0] - 4.0).abs() < 1e-12 && (fresh[1] - 0.25).abs() < 1e-12;
    Ok(verdict(
        worst_sum < 1e-12 && outside == 0 && fresh_ok,
        format!(
            "max |sum w - 1| {worst_sum:.1e}; {outside} outputs outside the banks; zero-initialized head {fresh:?}"
        ),
    ))
}

struct Trained {
    dataset: Dataset,
    comparison: Comparison,
    seconds: f64,
}

static TRAINED: OnceLock<Result<Trained, String>> = OnceLock::new();

/// The desk comparison run, shared by the training and evaluation criteria.
fn trained() -> Result<&'static Trained, String> {
    TRAINED
        .get_or_init(|| {
            let cfg = desk();
            let w = workers();
            let start = Instant::now();
            let dataset = generate_dataset(&cfg.dataset_config(), &w).map_err(err)?;
            let comparison = compare_training(&dataset, &cfg.model, &cfg.train, cfg.seed, &w).map_err(err)?;
            Ok(Trained { dataset, comparison, seconds: start.elapsed().as_secs_f64() })
        })
        .as_ref()
        .map_err(Clone::clone)
}

fn c5_training_ordering() -> Outcome {
    let cfg = desk();
    let t = trained()?;
    let (a, b) = (&t.comparison.immm, &t.comparison.linear);
    Ok(verdict(
        cfg.dataset.trajectories == 200
            && !cfg.dataset.noise
            && cfg.train.iterations == 2000
            && a.initial_mse < b.initial_mse
            && a.final_mse <= b.final_mse
            && t.seconds < 1800.0,
        format!(
            "initial immm {:.4} < linear {:.4}; final immm {:.4} <= linear {:.4} (published 0.0834 vs 0.3366, 5.16e-5 vs 10.5e-5); {:.0} s",
            a.initial_mse, b.initial_mse, a.final_mse, b.final_mse, t.seconds
        ),
    ))
}

fn eval_setup<'a>(cfg: &RunConfig, t: &'a Trained, train_ids: &'a [u64]) -> EvalSetup<'a> {
    EvalSetup {
        model: &t.comparison.immm.params,
        param_box: cfg.dataset.param_box.clone(),
        base: cfg.engagement.clone(),
        sensor: cfg.eval_sensor(),
        windows_per_run: cfg.eval.windows_per_run,
        min_window: cfg.dataset.min_window,
        max_retries: cfg.dataset.max_retries,
        train_ids,
    }
}

fn c6_monte_carlo_ordering() -> Outcome {
    let cfg = desk();
    let t = trained()?;
    let w = workers();
    let ids = t.dataset.train_ids();
    let report = monte_carlo_eval(&eval_setup(&cfg, t, &ids), 600, cfg.seed, &w).map_err(err)?;
    let [mse_n, mse_tau] = report.mse_normalized;
    let trace =
        sample_run(&t.comparison.immm.params, &cfg.engagement, &cfg.eval_sensor(), cfg.seed, &w).map_err(err)?;
    let worst = trace.max_relative_error_after(1.0);
    Ok(verdict(
        mse_n < mse_tau && worst.iter().all(|&e| e <= 0.10),
        format!(
            "600 runs: normalized MSE N {mse_n:.4} vs tau {mse_tau:.4}; sample run max relative error after 1 s N {:.3}, tau {:.3} (limit 0.10)",
            worst[0], worst[1]
        ),
    ))
}

fn c7_drag_direction() -> Outcome {
    let cfg = desk();
    let t = trained()?;
    let ids = t.dataset.train_ids();
    let curve =
        drag_sweep_eval(&eval_setup(&cfg, t, &ids), &[0.5, 1.0, 2.0], 100, cfg.seed, &workers()).map_err(err)?;
    let mse = |x: f64| curve.at(x).map(|p| p.report.mse_normalized).ok_or("missing sweep point");
    let (low, base, high) = (mse(0.5)?, mse(1.0)?, mse(2.0)?);
    let degrade = (0..2).all(|i| low[i] > base[i] && high[i] > base[i]);
    let ratio = [high[0] / base[0], high[1] / base[1]];
    Ok(verdict(
        degrade && ratio[1] >= ratio[0],
        format!(
            "MSE ratio to nominal at 0.5: N {:.3}, tau {:.3}; at 2.0: N {:.3}, tau {:.3} (tau must be >= N)",
            low[0] / base[0],
            low[1] / base[1],
            ratio[0],
            ratio[1]
        ),
    ))
}

fn c8_determinism() -> Outcome {
    let cfg = desk();
    let dcfg = cfg.dataset_config();
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut files = Vec::new();
    let mut datasets = Vec::new();
    for (run, count) in [1, 1, 3].into_iter().enumerate() {
        let ds = generate_dataset(&dcfg, &Workers::new(count).map_err(err)?).map_err(err)?;
        let dir = tmp.path().join(format!("d{run}"));
        write_dataset(&dir, &ds, &dcfg).map_err(err)?;
        let read = |f: &str| fs::read(dir.join(f)).map_err(err);
        files.push((read(MANIFEST)?, read(SAMPLES)?));
        datasets.push(ds);
    }
    let data_same = files.windows(2).all(|p| p[0] == p[1]);

    let settings = TrainSection { iterations: 100, ..cfg.train.clone() };
    let mut checkpoints = Vec::new();
    for count in [1, 1, 3] {
        let w = Workers::new(count).map_err(err)?;
        let out = train(&datasets[0], &cfg.model, &settings, cfg.seed, &w, |_| {}).map_err(err)?;
        let ckpt = Checkpoint {
            params: out.params,
            optimizer: out.optimizer,
            model: cfg.model.clone(),
            train_seed: cfg.seed,
            dataset_sha256: String::new(),
            train_ids: datasets[0].train_ids(),
        };
        checkpoints.push(ckpt.to_bytes());
    }
    let train_same = checkpoints.windows(2).all(|p| p[0] == p[1]);
    Ok(verdict(
        data_same && train_same,
        format!(
            "dataset files identical over 1/1/3 workers: {data_same}; checkpoints after {} iterations identical over 1/1/3 workers: {train_same}",
            settings.iterations
        ),
    ))
}

fn c9_lhs_strata() -> Outcome {
    let dims = ParamBox::default().dims();
    let mut bad = Vec::new();
    for n in [4usize, 100, 1000] {
        let points = lhs_unit(n, dims, &mut rng_from_seed(n as u64)).map_err(err)?;
        for k in 0..dims {
            let mut hits = vec![0usize; n];
            for p in &points {
                hits[((p[k] * n as f64).floor() as usize).min(n - 1)] += 1;
            }
            if points.len() != n || hits.iter().any(|&h| h != 1) {
                bad.push(format!("scenario n={n} axis {k}"));
            }
        }
        let (lo, hi) = (9, 9 + 3 * n + 17);
        let ends = stratified_indices(lo, hi, n, &mut rng_from_seed(n as u64)).map_err(err)?;
        let strata = index_strata(lo, hi, n);
        let mut hits = vec![0usize; n];
        for &e in &ends {
            if let Some(s) = strata.iter().position(|&(a, b)| a <= e && e < b) {
                hits[s] += 1;
            }
        }
        if ends.len() != n || hits.iter().any(|&h| h != 1) {
            bad.push(format!("window n={n}"));
        }
    }
    Ok(verdict(bad.is_empty(), format!("n in {{4, 100, 1000}}, {dims} scenario axes; violations: {bad:?}")))
}

fn propagate(dt: f64) -> Result<[f64; 7], String> {
    let mut cfg = EngagementConfig::default();
    // A piecewise-linear drag table has kinks that cap the order.
    cfg.missile.drag = DragTable::flat(0.3);
    let mut s = initial_state(&cfg).map_err(err)?;
    let (cmd_a, cmd_m) = (s.cmd_a, 40.0);
    for _ in 0..(1.0 / dt).round() as usize {
        s.cmd_a = cmd_a;
        s.cmd_m = cmd_m;
        s = integrate_step(&s, &cfg.missile, &cfg.aircraft, dt, cfg.air_density).map_err(err)?;
    }
    Ok([s.range, s.los, s.theta_a, s.theta_m, s.speed_m, s.accel_a, s.accel_m])
}

fn c10_rk4_order() -> Outcome {
    let steps = [0.04, 0.02, 0.01];
    let y: Vec<[f64; 7]> = steps.iter().map(|&dt| propagate(dt)).collect::<Result<_, _>>()?;
    let dist = |a: &[f64; 7], b: &[f64; 7]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let order = (dist(&y[0], &y[1]) / dist(&y[1], &y[2])).log2();
    Ok(verdict(order >= 3.5, format!("observed order {order:.3} from steps {steps:?} over 1 s, commands held")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("c1", "kinematic round trip", c1_round_trip),
        ("c2", "analytic parameter oracle", c2_analytic_oracle),
        ("c3", "gradient correctness", c3_gradients),
        ("c4", "multiple-model head invariants", c4_immm_invariants),
        ("c5", "training ordering at desk scale", c5_training_ordering),
        ("c6", "Monte Carlo ordering and sample-run convergence", c6_monte_carlo_ordering),
        ("c7", "drag sweep direction", c7_drag_direction),
        ("c8", "determinism", c8_determinism),
        ("c9", "LHS strata", c9_lhs_strata),
        ("c10", "RK4 order", c10_rk4_order),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {id:>3} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
