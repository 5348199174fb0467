//! The `pnid` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pnid_core::analytic::identify;
use pnid_core::dataset::{observe, Dataset};
use pnid_core::nn::HeadKind;
use pnid_core::sensing::{estimate_range_rate, grid_stride};
use pnid_core::sim::simulate;

use crate::checkpoint::Checkpoint;
use crate::config::{Preset, RunConfig};
use crate::datafile::{read_dataset, sha256_hex, write_dataset};
use crate::error::{Error, Result};
use crate::eval::{self, EvalSetup};
use crate::export;
use crate::parallel::{generate_dataset, Workers};
use crate::reference;
use crate::repro::{block_path, ReproBlock};
use crate::train::{self, blocks_non_increasing, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeadArg {
    Immm,
    Linear,
}

impl From<HeadArg> for HeadKind {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Immm => HeadKind::Immm,
            HeadArg::Linear => HeadKind::Linear,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML); missing keys come from the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (simulate) or directory (everything else).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Radar noise on this command's inputs.
    #[arg(long, global = true, value_enum)]
    noise: Option<Toggle>,
    #[arg(long, global = true, value_enum)]
    head: Option<HeadArg>,
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the configured engagement; writes the trajectory and radar CSVs.
    Simulate,
    /// Generate a training dataset directory.
    Dataset {
        /// Also write samples.csv.
        #[arg(long)]
        csv: bool,
    },
    /// Train one model.
    Train {
        /// Dataset directory; generated from the config when omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Monte Carlo evaluation on held-out scenarios.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of runs (defaults to the config).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Replay the configured engagement tick by tick.
    SampleRun {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Per-cell evaluation over a grid of fixed (N, tau).
    GridSweep {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Evaluation with the drag coefficient scaled.
    DragSweep {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train both output heads with identical backbone, seed and batches.
    Compare {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Closed-form identification on the configured engagement.
    Analytic,
}

#[derive(Debug, Parser)]
#[command(name = "pnid", version, about = "Missile guidance parameter identification", arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run_cli(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Ctx<'a> {
    cfg: RunConfig,
    workers: Workers,
    argv: &'a [String],
}

impl Ctx<'_> {
    fn repro(&self, out: &Path, is_dir: bool, inputs: Vec<(String, String)>) -> Result<()> {
        ReproBlock { command: self.argv, config: &self.cfg, inputs, worker_threads: self.workers.threads() }
            .write(&block_path(out, is_dir))
    }
}

fn run(cli: Cli, argv: &[String]) -> Result<()> {
    let c = cli.common;
    let mut cfg = RunConfig::load(c.config.as_deref(), c.preset)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(h) = c.head {
        cfg.model.head = h.into();
    }
    let noise = c.noise.map(|t| t == Toggle::On);
    match &cli.command {
        Command::Dataset { .. } | Command::Train { .. } | Command::Compare { .. } => {
            if let Some(n) = noise {
                cfg.dataset.noise = n;
            }
        }
        _ => {
            if let Some(n) = noise {
                cfg.eval.noise = n;
            }
        }
    }
    cfg.validate()?;
    let workers = Workers::new(cfg.workers)?;
    let ctx = Ctx { cfg, workers, argv };
    let out = |default: &str| c.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match cli.command {
        Command::Simulate => simulate_cmd(&ctx, &out("trajectory.csv")),
        Command::Dataset { csv } => dataset_cmd(&ctx, &out("dataset"), csv),
        Command::Train { dataset } => train_cmd(&ctx, dataset.as_deref(), &out("train")),
        Command::Eval { checkpoint, runs } => eval_cmd(&ctx, &checkpoint, runs, &out("eval")),
        Command::SampleRun { checkpoint } => sample_run_cmd(&ctx, &checkpoint, &out("sample-run")),
        Command::GridSweep { checkpoint } => grid_cmd(&ctx, &checkpoint, &out("grid-sweep")),
        Command::DragSweep { checkpoint } => drag_cmd(&ctx, &checkpoint, &out("drag-sweep")),
        Command::Compare { dataset } => compare_cmd(&ctx, dataset.as_deref(), &out("compare")),
        Command::Analytic => analytic_cmd(&ctx, &out("analytic")),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn simulate_cmd(ctx: &Ctx<'_>, out: &Path) -> Result<()> {
    let traj = simulate(&ctx.cfg.engagement)?;
    export::write(out, &export::trajectory_csv(&traj))?;
    let sensor = ctx.cfg.eval_sensor();
    let seed = eval::eval_seed(ctx.cfg.seed, eval::stream::SAMPLE_RUN);
    let (series, features) = observe(&traj, &sensor, seed)?;
    let meta =
        [("noise", sensor.noise.to_string()), ("los_rate", if sensor.noise { "differenced" } else { "exact" }.into())];
    export::write(&with_suffix(out, ".measurements.csv"), &export::measurements_csv(&series, &features, &meta))?;
    let last = traj.states.last().expect("trajectory has states");
    eprintln!(
        "{}: t = {:.3} s, final range {:.4} m, {} states",
        traj.termination.as_str(),
        last.t,
        last.range,
        traj.states.len()
    );
    ctx.repro(out, false, Vec::new())
}

fn dataset_cmd(ctx: &Ctx<'_>, out: &Path, csv: bool) -> Result<()> {
    let dcfg = ctx.cfg.dataset_config();
    let dataset = generate_dataset(&dcfg, &ctx.workers)?;
    let manifest = write_dataset(out, &dataset, &dcfg)?;
    if csv {
        export::write(&out.join("samples.csv"), &export::dataset_csv(&dataset))?;
    }
    eprintln!(
        "{} train / {} validation samples from {} trajectories; samples sha256 {}",
        manifest.train_samples, manifest.validation_samples, dcfg.trajectories, manifest.samples_sha256
    );
    ctx.repro(out, true, Vec::new())
}

/// Loads the dataset directory, or generates one into `<out>/dataset`.
fn obtain_dataset(ctx: &Ctx<'_>, path: Option<&Path>, out: &Path) -> Result<(Dataset, String, String)> {
    match path {
        Some(p) => {
            let loaded = read_dataset(p)?;
            if loaded.manifest.generation.input_steps != ctx.cfg.model.input_steps {
                return Err(Error::Config(format!(
                    "dataset windows use K = {} but the model is configured with K = {}",
                    loaded.manifest.generation.input_steps, ctx.cfg.model.input_steps
                )));
            }
            Ok((loaded.dataset, loaded.manifest.samples_sha256, p.display().to_string()))
        }
        None => {
            let dcfg = ctx.cfg.dataset_config();
            let dataset = generate_dataset(&dcfg, &ctx.workers)?;
            let dir = out.join("dataset");
            let manifest = write_dataset(&dir, &dataset, &dcfg)?;
            Ok((dataset, manifest.samples_sha256, dir.display().to_string()))
        }
    }
}

fn checkpoint_of(outcome: &TrainOutcome, ctx: &Ctx<'_>, dataset: &Dataset, sha: &str, head: HeadKind) -> Checkpoint {
    Checkpoint {
        params: outcome.params.clone(),
        optimizer: outcome.optimizer.clone(),
        model: pnid_core::nn::ModelConfig { head, ..ctx.cfg.model.clone() },
        train_seed: outcome.seed,
        dataset_sha256: sha.to_string(),
        train_ids: dataset.train_ids(),
    }
}

fn train_summary(outcome: &TrainOutcome) -> String {
    format!(
        "quantity,value\ninitial_train_mse,{}\nfinal_train_mse,{}\nvalidation_mse_N,{}\nvalidation_mse_tau,{}\niterations,{}\n",
        outcome.initial_mse,
        outcome.final_mse,
        outcome.validation_mse[0],
        outcome.validation_mse[1],
        outcome.curve.len()
    )
}

fn train_cmd(ctx: &Ctx<'_>, dataset: Option<&Path>, out: &Path) -> Result<()> {
    let (dataset, sha, source) = obtain_dataset(ctx, dataset, out)?;
    let cfg = &ctx.cfg;
    let outcome = train::train(&dataset, &cfg.model, &cfg.train, cfg.seed, &ctx.workers, |p| {
        if (p.iteration + 1) % 100 == 0 {
            eprintln!("iteration {:>6}  loss {:.6}  rate {:.3e}", p.iteration + 1, p.loss, p.learning_rate);
        }
    })?;
    let head = cfg.model.head;
    let ckpt_sha = checkpoint_of(&outcome, ctx, &dataset, &sha, head).save(&out.join("model.ckpt"))?;
    export::write(&out.join("loss_curve.csv"), &export::curves_csv(&[(head.as_str(), &outcome.curve)], 100))?;
    export::write(&out.join("summary.csv"), &train_summary(&outcome))?;
    eprintln!(
        "initial train MSE {:.6}, final {:.6}; checkpoint sha256 {ckpt_sha}",
        outcome.initial_mse, outcome.final_mse
    );
    ctx.repro(out, true, vec![("dataset".into(), format!("{source} (samples sha256 {sha})"))])
}

fn compare_cmd(ctx: &Ctx<'_>, dataset: Option<&Path>, out: &Path) -> Result<()> {
    let (dataset, sha, source) = obtain_dataset(ctx, dataset, out)?;
    let cfg = &ctx.cfg;
    let cmp = train::compare_training(&dataset, &cfg.model, &cfg.train, cfg.seed, &ctx.workers)?;
    export::write(
        &out.join("training_curves.csv"),
        &export::curves_csv(&[("immm", &cmp.immm.curve), ("linear", &cmp.linear.curve)], 100),
    )?;
    checkpoint_of(&cmp.immm, ctx, &dataset, &sha, HeadKind::Immm).save(&out.join("immm.ckpt"))?;
    checkpoint_of(&cmp.linear, ctx, &dataset, &sha, HeadKind::Linear).save(&out.join("linear.ckpt"))?;
    let r = reference::published().training;
    let summary = format!(
        "# published reference values come from a full-scale run and are for annotation only\n\
         head,initial_mse,final_mse,validation_mse_N,validation_mse_tau,ma100_blocks_non_increasing,published_initial_mse,published_final_mse\n\
         immm,{},{},{},{},{},{},{}\nlinear,{},{},{},{},{},{},{}\n",
        cmp.immm.initial_mse,
        cmp.immm.final_mse,
        cmp.immm.validation_mse[0],
        cmp.immm.validation_mse[1],
        blocks_non_increasing(&cmp.immm.curve, 100),
        r.immm_initial_mse,
        r.immm_final_mse,
        cmp.linear.initial_mse,
        cmp.linear.final_mse,
        cmp.linear.validation_mse[0],
        cmp.linear.validation_mse[1],
        blocks_non_increasing(&cmp.linear.curve, 100),
        r.linear_initial_mse,
        r.linear_final_mse,
    );
    export::write(&out.join("compare_summary.csv"), &summary)?;
    eprint!("{summary}");
    ctx.repro(out, true, vec![("dataset".into(), format!("{source} (samples sha256 {sha})"))])
}

fn load_checkpoint(path: &Path) -> Result<(Checkpoint, (String, String))> {
    let bytes = std::fs::read(path).map_err(crate::error::io_err(path))?;
    let ckpt = Checkpoint::from_bytes(&bytes, path)?;
    Ok((ckpt, ("checkpoint".into(), format!("{} (sha256 {})", path.display(), sha256_hex(&bytes)))))
}

fn setup<'a>(ctx: &Ctx<'_>, ckpt: &'a Checkpoint) -> EvalSetup<'a> {
    let cfg = &ctx.cfg;
    EvalSetup {
        model: &ckpt.params,
        param_box: cfg.dataset.param_box.clone(),
        base: cfg.engagement.clone(),
        sensor: cfg.eval_sensor(),
        windows_per_run: cfg.eval.windows_per_run,
        min_window: cfg.dataset.min_window,
        max_retries: cfg.dataset.max_retries,
        train_ids: &ckpt.train_ids,
    }
}

fn eval_cmd(ctx: &Ctx<'_>, checkpoint: &Path, runs: Option<usize>, out: &Path) -> Result<()> {
    let (ckpt, input) = load_checkpoint(checkpoint)?;
    let runs = runs.unwrap_or(ctx.cfg.eval.monte_carlo_runs);
    let report = eval::monte_carlo_eval(&setup(ctx, &ckpt), runs, ctx.cfg.seed, &ctx.workers)?;
    let r = reference::published().monte_carlo;
    export::write(&out.join("eval_samples.csv"), &export::eval_samples_csv(&report))?;
    let summary = export::eval_summary_csv(&report, Some([r.mse_gain, r.mse_tau]));
    export::write(&out.join("eval_summary.csv"), &summary)?;
    eprint!("{summary}");
    ctx.repro(out, true, vec![input])
}

fn sample_run_cmd(ctx: &Ctx<'_>, checkpoint: &Path, out: &Path) -> Result<()> {
    let (ckpt, input) = load_checkpoint(checkpoint)?;
    let trace =
        eval::sample_run(&ckpt.params, &ctx.cfg.engagement, &ctx.cfg.eval_sensor(), ctx.cfg.seed, &ctx.workers)?;
    export::write(&out.join("sample_run.csv"), &export::sample_run_csv(&trace))?;
    let worst = trace.max_relative_error_after(1.0);
    eprintln!("max relative error after 1 s: N {:.4}, tau {:.4}", worst[0], worst[1]);
    ctx.repro(out, true, vec![input])
}

fn grid_cmd(ctx: &Ctx<'_>, checkpoint: &Path, out: &Path) -> Result<()> {
    let (ckpt, input) = load_checkpoint(checkpoint)?;
    let e = &ctx.cfg.eval;
    let grid = eval::grid_eval(
        &setup(ctx, &ckpt),
        &e.grid_gain,
        &e.grid_tau,
        e.grid_runs_per_cell,
        ctx.cfg.seed,
        &ctx.workers,
    )?;
    let r = reference::published().grid;
    export::write(&out.join("grid.csv"), &export::grid_csv(&grid, |g, t| Some(r.nearest(g, t))))?;
    eprintln!("{} cells; max/min combined MSE {:.3}", grid.cells.len(), grid.spread());
    ctx.repro(out, true, vec![input])
}

fn drag_cmd(ctx: &Ctx<'_>, checkpoint: &Path, out: &Path) -> Result<()> {
    let (ckpt, input) = load_checkpoint(checkpoint)?;
    let e = &ctx.cfg.eval;
    let curve =
        eval::drag_sweep_eval(&setup(ctx, &ckpt), &e.drag_scales, e.drag_runs_per_point, ctx.cfg.seed, &ctx.workers)?;
    let text = export::sweep_csv(&curve);
    export::write(&out.join("drag_sweep.csv"), &text)?;
    eprint!("{text}");
    ctx.repro(out, true, vec![input])
}

fn analytic_cmd(ctx: &Ctx<'_>, out: &Path) -> Result<()> {
    let cfg = &ctx.cfg;
    let traj = simulate(&cfg.engagement)?;
    let sensor = cfg.eval_sensor();
    let seed = eval::eval_seed(cfg.seed, eval::stream::SAMPLE_RUN);
    let (series, features) = observe(&traj, &sensor, seed)?;
    let v_r = if sensor.noise {
        estimate_range_rate(&series, sensor.rate_width, sensor.rate_mode)?
    } else {
        let stride = grid_stride(sensor.period, traj.dt)?;
        traj.kinematics()?.iter().step_by(stride).map(|k| k.0).collect()
    };
    let (points, solution) = identify(&features, &v_r, sensor.rate_width)?;
    let truth = [cfg.engagement.missile.gain, cfg.engagement.missile.tau];
    export::write(&out.join("reconstruction.csv"), &export::reconstruction_csv(&points))?;
    export::write(&out.join("solution.csv"), &export::solution_csv(&solution, truth))?;
    eprintln!("N = {:.4} (true {}), tau = {:.4} (true {})", solution.gain, truth[0], solution.tau, truth[1]);
    ctx.repro(out, true, Vec::new())
}
