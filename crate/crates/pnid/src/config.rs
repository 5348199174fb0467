//! Run configuration. One TOML file drives every subcommand; any key left out
//! falls back to the named preset (`desk` unless the file or the command line
//! says otherwise).

use std::path::Path;

use pnid_core::dataset::{DatasetConfig, ParamBox, SensorConfig};
use pnid_core::nn::{AdamConfig, HeadKind, ModelConfig};
use pnid_core::sim::EngagementConfig;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Counts shrunk to run on one desktop CPU.
    #[default]
    Desk,
    /// Full-scale counts of the published experiments.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub trajectories: usize,
    pub windows_per_trajectory: usize,
    pub min_window: usize,
    pub train_fraction: f64,
    pub max_retries: usize,
    /// Radar noise on the training inputs.
    pub noise: bool,
    pub param_box: ParamBox,
}

impl Default for DatasetSection {
    fn default() -> Self {
        let d = DatasetConfig::default();
        Self {
            trajectories: d.trajectories,
            windows_per_trajectory: d.windows_per_trajectory,
            min_window: d.min_window,
            train_fraction: d.train_fraction,
            max_retries: d.max_retries,
            noise: false,
            param_box: d.param_box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub iterations: u64,
    pub adam: AdamConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { batch_size: 64, iterations: 2000, adam: AdamConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Radar noise on the evaluation inputs.
    pub noise: bool,
    pub monte_carlo_runs: usize,
    pub windows_per_run: usize,
    pub grid_gain: Vec<f64>,
    pub grid_tau: Vec<f64>,
    pub grid_runs_per_cell: usize,
    pub drag_scales: Vec<f64>,
    pub drag_runs_per_point: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            noise: true,
            monte_carlo_runs: 600,
            windows_per_run: 20,
            grid_gain: vec![2.5, 4.0, 5.5],
            grid_tau: vec![0.1, 0.25, 0.4],
            grid_runs_per_cell: 20,
            drag_scales: vec![0.5, 1.0, 2.0],
            drag_runs_per_point: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    /// Master seed. Dataset, initialization, batching and evaluation each
    /// derive their own streams from it.
    pub seed: u64,
    /// Worker threads for parallel sections; 0 means one per core.
    pub workers: usize,
    pub engagement: EngagementConfig,
    pub sensor: SensorConfig,
    pub dataset: DatasetSection,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

fn evenly(min: f64, max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let desk = Self {
            preset,
            seed: 1,
            workers: 0,
            engagement: EngagementConfig::default(),
            sensor: SensorConfig::default(),
            dataset: DatasetSection::default(),
            model: ModelConfig { input_width: 32, hidden: vec![32, 32], ..ModelConfig::default() },
            train: TrainSection::default(),
            eval: EvalSection::default(),
        };
        match preset {
            Preset::Desk => desk,
            Preset::Paper => Self {
                dataset: DatasetSection { trajectories: 6000, ..desk.dataset },
                model: ModelConfig::default(),
                train: TrainSection { batch_size: 3000, iterations: 100_000, ..desk.train },
                eval: EvalSection {
                    monte_carlo_runs: 6000,
                    grid_gain: evenly(2.5, 5.5, 11),
                    grid_tau: evenly(0.1, 0.4, 11),
                    grid_runs_per_cell: 150,
                    drag_scales: vec![0.5, 0.75, 1.0, 1.5, 2.0],
                    drag_runs_per_point: 300,
                    ..desk.eval
                },
                ..desk
            },
        }
    }

    /// Reads a config file layered over a preset. `preset` overrides the
    /// file's own `preset` key.
    pub fn load(path: Option<&Path>, preset: Option<Preset>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(io_err(p))?;
                text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        Self::from_table(file, preset)
    }

    pub fn from_toml_str(text: &str, preset: Option<Preset>) -> Result<Self> {
        let table = text.parse::<toml::Table>().map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(table, preset)
    }

    fn from_table(file: toml::Table, preset: Option<Preset>) -> Result<Self> {
        let preset = match preset {
            Some(p) => p,
            None => match file.get("preset") {
                Some(v) => v.clone().try_into().map_err(|e| Error::Config(format!("preset: {e}")))?,
                None => Preset::Desk,
            },
        };
        let mut merged = toml::Table::try_from(Self::preset(preset)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, file);
        merged.insert("preset".into(), toml::Value::try_from(preset).map_err(|e| Error::Config(e.to_string()))?);
        let cfg: Self = toml::Value::Table(merged).try_into().map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.engagement.validate()?;
        self.dataset_config().validate()?;
        if self.train.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        if self.eval.grid_gain.is_empty() || self.eval.grid_tau.is_empty() {
            return Err(Error::Config("evaluation grid needs at least one N and one tau value".into()));
        }
        if self.eval.drag_scales.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("drag scales must be positive".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration always serializes")
    }

    pub fn with_head(mut self, head: HeadKind) -> Self {
        self.model.head = head;
        self
    }

    /// Dataset settings for the training data.
    pub fn dataset_config(&self) -> DatasetConfig {
        let d = &self.dataset;
        DatasetConfig {
            param_box: d.param_box.clone(),
            base: self.engagement.clone(),
            sensor: SensorConfig { noise: d.noise, ..self.sensor },
            trajectories: d.trajectories,
            windows_per_trajectory: d.windows_per_trajectory,
            input_steps: self.model.input_steps,
            min_window: d.min_window,
            train_fraction: d.train_fraction,
            seed: self.seed,
            max_retries: d.max_retries,
        }
    }

    /// Sensor used for evaluation runs.
    pub fn eval_sensor(&self) -> SensorConfig {
        SensorConfig { noise: self.eval.noise, ..self.sensor }
    }
}

/// Deep merge of `over` into `base`; tables merge key by key, anything else
/// is replaced.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
