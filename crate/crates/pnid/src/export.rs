//! Plot-ready CSV exports. Metadata (seeds, units) goes in leading `#` lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pnid_core::analytic::{ParamSolution, ReconstructionPoint};
use pnid_core::dataset::{Dataset, Sample};
use pnid_core::sensing::{feature, FeatureSeries, MeasurementSeries};
use pnid_core::sim::Trajectory;

use crate::error::{io_err, Result};
use crate::eval::{EvalReport, GridReport, SampleRunTrace, SweepCurve};
use crate::train::{moving_average, CurvePoint};

pub const TRAJECTORY_HEADER: &str = "t,R,q,theta_A,theta_M,V_M,a_A,a_M,a_cA,a_cM";

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for s in &traj.states {
        row(&mut out, &[s.t, s.range, s.los, s.theta_a, s.theta_m, s.speed_m, s.accel_a, s.accel_m, s.cmd_a, s.cmd_m]);
    }
    out
}

/// Radar samples next to the assembled feature rows.
pub fn measurements_csv(series: &MeasurementSeries, features: &FeatureSeries, meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# measurement_seed = {}", series.seed);
    let _ = writeln!(out, "# period_s = {}", series.period);
    let _ = writeln!(out, "# sigma_range_m = {}", series.sigma_range);
    let _ = writeln!(out, "# sigma_los_rad = {}", series.sigma_los);
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str("tick,t,R_meas,q_meas");
    for name in feature::NAMES {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for (m, f) in series.samples.iter().zip(&features.rows) {
        let _ = write!(out, "{},", m.tick);
        let mut vals = vec![m.t, m.range, m.los];
        vals.extend_from_slice(f);
        row(&mut out, &vals);
    }
    out
}

pub fn reconstruction_csv(points: &[ReconstructionPoint]) -> String {
    let mut out = String::from("t,f1,f2,theta_M,V_M,a_M,a_M_g,valid\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.t,
            p.f1,
            p.f2,
            p.theta_m,
            p.speed_m,
            p.accel_m,
            p.accel_m_g,
            u8::from(p.valid)
        );
    }
    out
}

pub fn solution_csv(sol: &ParamSolution, truth: [f64; 2]) -> String {
    format!(
        "N,tau,residual,instants,N_true,tau_true\n{},{},{},{},{},{}\n",
        sol.gain, sol.tau, sol.residual, sol.instants, truth[0], truth[1]
    )
}

/// Normalized samples, one line per window row.
pub fn dataset_csv(dataset: &Dataset) -> String {
    let mut out = String::from("# all values min-max normalized with the manifest statistics\n");
    out.push_str("split,trajectory,end_tick,step");
    for name in feature::NAMES {
        let _ = write!(out, ",{name}");
    }
    out.push_str(",N,tau\n");
    let mut emit = |split: &str, samples: &[Sample]| {
        for s in samples {
            for (k, r) in s.window.iter().enumerate() {
                let _ = write!(out, "{split},{:016x},{},{k},", s.trajectory, s.end_tick);
                let mut vals = r.to_vec();
                vals.extend_from_slice(&s.label);
                row(&mut out, &vals);
            }
        }
    };
    emit("train", &dataset.train);
    emit("validation", &dataset.validation);
    out
}

/// Loss curves side by side; `curves` must have equal lengths.
pub fn curves_csv(curves: &[(&str, &[CurvePoint])], window: usize) -> String {
    let mut out = String::from("iteration,learning_rate");
    for (name, _) in curves {
        let _ = write!(out, ",loss_{name},loss_{name}_ma{window}");
    }
    out.push('\n');
    let ma: Vec<Vec<f64>> = curves.iter().map(|(_, c)| moving_average(c, window)).collect();
    let len = curves.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
    for i in 0..len {
        let p = curves[0].1[i];
        let _ = write!(out, "{},", p.iteration);
        let mut vals = vec![p.learning_rate];
        for (k, (_, c)) in curves.iter().enumerate() {
            vals.push(c[i].loss);
            vals.push(ma[k][i]);
        }
        row(&mut out, &vals);
    }
    out
}

pub fn eval_samples_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "trajectory,end_tick,N_true,tau_true,N_hat,tau_hat,N_true_norm,tau_true_norm,N_hat_norm,tau_hat_norm\n",
    );
    for s in &report.samples {
        let _ = write!(out, "{:016x},{},", s.trajectory, s.end_tick);
        let mut vals = s.truth.to_vec();
        vals.extend_from_slice(&s.estimate);
        vals.extend_from_slice(&s.truth_normalized);
        vals.extend_from_slice(&s.estimate_normalized);
        row(&mut out, &vals);
    }
    out
}

/// `quantity,normalized,physical` summary with optional reference column.
pub fn eval_summary_csv(report: &EvalReport, reference: Option<[f64; 2]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# runs = {}", report.runs);
    let _ = writeln!(out, "# samples = {}", report.samples.len());
    let _ = writeln!(out, "# runtime_s = {:.3}", report.runtime_seconds);
    out.push_str("quantity,mse_normalized,mse_physical,published_reference\n");
    let names = ["N", "tau"];
    for i in 0..2 {
        let r = reference.map_or(String::new(), |r| r[i].to_string());
        let _ = writeln!(out, "{},{},{},{r}", names[i], report.mse_normalized[i], report.mse_physical[i]);
    }
    let _ = writeln!(out, "combined,{},,", report.combined_normalized());
    out
}

pub fn grid_csv(grid: &GridReport, reference: impl Fn(f64, f64) -> Option<f64>) -> String {
    let mut out = String::from(
        "N,tau,runs,samples,mse_N_norm,mse_tau_norm,mse_combined_norm,mse_N_phys,mse_tau_phys,published_reference_mse\n",
    );
    for c in &grid.cells {
        let r = &c.report;
        let _ = write!(out, "{},{},{},{},", c.gain, c.tau, r.runs, r.samples.len());
        let _ = write!(
            out,
            "{},{},{},{},{},",
            r.mse_normalized[0],
            r.mse_normalized[1],
            r.combined_normalized(),
            r.mse_physical[0],
            r.mse_physical[1]
        );
        let _ = writeln!(out, "{}", reference(c.gain, c.tau).map_or(String::new(), |v| v.to_string()));
    }
    out
}

/// Sweep curve with each point's MSE relative to the point at `x = 1`.
pub fn sweep_csv(curve: &SweepCurve) -> String {
    let base = curve.at(1.0).map(|p| p.report.mse_normalized);
    let mut out =
        format!("{},runs,samples,mse_N_norm,mse_tau_norm,mse_N_phys,mse_tau_phys,ratio_N,ratio_tau\n", curve.variable);
    for p in &curve.points {
        let r = &p.report;
        let ratio = |i: usize| base.map_or(String::new(), |b| (r.mse_normalized[i] / b[i]).to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.x,
            r.runs,
            r.samples.len(),
            r.mse_normalized[0],
            r.mse_normalized[1],
            r.mse_physical[0],
            r.mse_physical[1],
            ratio(0),
            ratio(1)
        );
    }
    out
}

/// Estimates and regime weights per radar tick.
pub fn sample_run_csv(trace: &SampleRunTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# N_true = {}", trace.truth[0]);
    let _ = writeln!(out, "# tau_true = {}", trace.truth[1]);
    let _ = writeln!(out, "# measurement_seed = {}", trace.measurement_seed);
    let _ = writeln!(out, "# termination = {}", trace.termination.as_str());
    out.push_str("t,window,N_hat,tau_hat");
    if let Some(first) = trace.ticks.first() {
        for (g, w) in first.weights.iter().enumerate() {
            for j in 0..w.len() {
                let _ = write!(out, ",G{}_{}", g + 1, j + 1);
            }
        }
    }
    out.push('\n');
    for k in &trace.ticks {
        let _ = write!(out, "{},{},", k.t, k.window);
        let mut vals = vec![k.estimate[0], k.estimate[1]];
        k.weights.iter().for_each(|w| vals.extend_from_slice(w));
        row(&mut out, &vals);
    }
    out
}
