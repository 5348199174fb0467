//! Dataset on disk: `manifest.toml` (every seed, range, count, the split and
//! the normalization) next to `samples.bin`, a little-endian block of
//! length-prefixed windows whose SHA-256 is recorded in the manifest.
//!
//! `samples.bin` layout: magic `PNIDSMP1`, `u64` sample count, then per
//! sample `u64` trajectory id, `u64` end tick, `u64` split (0 train,
//! 1 validation), `u64` window length `l`, two `f64` labels and `6 l` `f64`
//! feature values, row-major. Everything is normalized.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pnid_core::dataset::{
    Dataset, DatasetConfig, NormStats, ParamBox, Sample, Scenario, SensorConfig, Split, TrajectoryInfo,
};
use pnid_core::sensing::{Features, FEATURES};
use pnid_core::sim::{EngagementConfig, Termination};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{format_err, io_err, Error, Result};

pub const FORMAT: &str = "pnid-dataset/1";
pub const MANIFEST: &str = "manifest.toml";
pub const SAMPLES: &str = "samples.bin";
const MAGIC: &[u8; 8] = b"PNIDSMP1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generation {
    pub seed: u64,
    pub trajectories: usize,
    pub windows_per_trajectory: usize,
    pub input_steps: usize,
    pub min_window: usize,
    pub train_fraction: f64,
    pub train_slots: usize,
    pub max_retries: usize,
    pub sensor: SensorConfig,
    pub param_box: ParamBox,
    pub engagement: EngagementConfig,
}

impl Generation {
    pub fn from_config(cfg: &DatasetConfig) -> Self {
        Self {
            seed: cfg.seed,
            trajectories: cfg.trajectories,
            windows_per_trajectory: cfg.windows_per_trajectory,
            input_steps: cfg.input_steps,
            min_window: cfg.min_window,
            train_fraction: cfg.train_fraction,
            train_slots: cfg.train_slots(),
            max_retries: cfg.max_retries,
            sensor: cfg.sensor,
            param_box: cfg.param_box.clone(),
            engagement: cfg.base.clone(),
        }
    }

    pub fn to_config(&self) -> DatasetConfig {
        DatasetConfig {
            param_box: self.param_box.clone(),
            base: self.engagement.clone(),
            sensor: self.sensor,
            trajectories: self.trajectories,
            windows_per_trajectory: self.windows_per_trajectory,
            input_steps: self.input_steps,
            min_window: self.min_window,
            train_fraction: self.train_fraction,
            seed: self.seed,
            max_retries: self.max_retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRow {
    pub slot: usize,
    /// Hex trajectory id.
    pub id: String,
    pub split: Split,
    pub attempts: usize,
    pub termination: Termination,
    pub ticks: usize,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub samples_file: String,
    pub samples_sha256: String,
    pub train_samples: usize,
    pub validation_samples: usize,
    pub generation: Generation,
    pub norm: NormStats,
    pub trajectories: Vec<TrajectoryRow>,
}

pub fn hex_id(id: u64) -> String {
    format!("{id:016x}")
}

pub fn parse_id(s: &str) -> Option<u64> {
    u64::from_str_radix(s, 16).ok()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn encode_samples(dataset: &Dataset) -> Vec<u8> {
    let all = dataset.train.iter().map(|s| (0u64, s)).chain(dataset.validation.iter().map(|s| (1u64, s)));
    let count = dataset.train.len() + dataset.validation.len();
    let mut buf = Vec::with_capacity(16 + count * (48 + 100 * 48));
    buf.extend_from_slice(MAGIC);
    put_u64(&mut buf, count as u64);
    for (split, s) in all {
        put_u64(&mut buf, s.trajectory);
        put_u64(&mut buf, s.end_tick as u64);
        put_u64(&mut buf, split);
        put_u64(&mut buf, s.window.len() as u64);
        s.label.iter().for_each(|&v| put_f64(&mut buf, v));
        for row in &s.window {
            row.iter().for_each(|&v| put_f64(&mut buf, v));
        }
    }
    buf
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    pub fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

/// Train and validation samples from a `samples.bin` image.
pub fn decode_samples(bytes: &[u8], path: &Path) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let bad = |msg: &str| format_err(path, msg);
    let mut r = Reader::new(bytes);
    if r.take(8) != Some(&MAGIC[..]) {
        return Err(bad("not a sample block (bad magic)"));
    }
    let count = r.u64().ok_or_else(|| bad("truncated header"))?;
    let (mut train, mut validation) = (Vec::new(), Vec::new());
    for k in 0..count {
        let trunc = || bad(&format!("truncated at sample {k}"));
        let trajectory = r.u64().ok_or_else(trunc)?;
        let end_tick = r.u64().ok_or_else(trunc)? as usize;
        let split = r.u64().ok_or_else(trunc)?;
        let len = r.u64().ok_or_else(trunc)? as usize;
        let label = [r.f64().ok_or_else(trunc)?, r.f64().ok_or_else(trunc)?];
        if len == 0 || len > bytes.len() / (8 * FEATURES) {
            return Err(bad(&format!("sample {k} has an impossible window length {len}")));
        }
        let mut window: Vec<Features> = Vec::with_capacity(len);
        for _ in 0..len {
            let mut row = [0.0; FEATURES];
            for v in &mut row {
                *v = r.f64().ok_or_else(trunc)?;
            }
            window.push(row);
        }
        let sample = Sample { trajectory, end_tick, window, label };
        match split {
            0 => train.push(sample),
            1 => validation.push(sample),
            other => return Err(bad(&format!("sample {k} has unknown split tag {other}"))),
        }
    }
    if !r.done() {
        return Err(bad("trailing bytes after the last sample"));
    }
    Ok((train, validation))
}

pub fn manifest_for(dataset: &Dataset, cfg: &DatasetConfig, samples_sha256: String) -> Manifest {
    Manifest {
        format: FORMAT.into(),
        samples_file: SAMPLES.into(),
        samples_sha256,
        train_samples: dataset.train.len(),
        validation_samples: dataset.validation.len(),
        generation: Generation::from_config(cfg),
        norm: dataset.norm.clone(),
        trajectories: dataset
            .trajectories
            .iter()
            .map(|t| TrajectoryRow {
                slot: t.slot,
                id: hex_id(t.id),
                split: t.split,
                attempts: t.attempts,
                termination: t.termination,
                ticks: t.ticks,
                scenario: t.scenario,
                rejected: t.rejected.clone(),
            })
            .collect(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// Writes `manifest.toml` and `samples.bin` into `dir` (created if needed).
pub fn write_dataset(dir: &Path, dataset: &Dataset, cfg: &DatasetConfig) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let bytes = encode_samples(dataset);
    let manifest = manifest_for(dataset, cfg, sha256_hex(&bytes));
    write_file(&dir.join(SAMPLES), &bytes)?;
    let text =
        format!("# pnid dataset manifest\n{}", toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?);
    write_file(&dir.join(MANIFEST), text.as_bytes())?;
    Ok(manifest)
}

pub struct LoadedDataset {
    pub dataset: Dataset,
    pub manifest: Manifest,
    pub dir: PathBuf,
}

/// Reads a dataset directory, verifying the content hash and counts.
pub fn read_dataset(dir: &Path) -> Result<LoadedDataset> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| format_err(&mpath, e.to_string()))?;
    if manifest.format != FORMAT {
        return Err(format_err(&mpath, format!("unsupported format `{}`", manifest.format)));
    }
    let spath = dir.join(&manifest.samples_file);
    let bytes = fs::read(&spath).map_err(io_err(&spath))?;
    let digest = sha256_hex(&bytes);
    if digest != manifest.samples_sha256 {
        return Err(format_err(&spath, format!("content hash {digest} does not match the manifest")));
    }
    let (train, validation) = decode_samples(&bytes, &spath)?;
    if train.len() != manifest.train_samples || validation.len() != manifest.validation_samples {
        return Err(format_err(&spath, "sample counts disagree with the manifest"));
    }
    manifest.norm.validate()?;
    let trajectories = manifest
        .trajectories
        .iter()
        .map(|t| {
            Ok(TrajectoryInfo {
                slot: t.slot,
                id: parse_id(&t.id).ok_or_else(|| format_err(&mpath, format!("bad trajectory id `{}`", t.id)))?,
                split: t.split,
                scenario: t.scenario,
                attempts: t.attempts,
                rejected: t.rejected.clone(),
                termination: t.termination,
                ticks: t.ticks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset { norm: manifest.norm.clone(), train, validation, trajectories };
    Ok(LoadedDataset { dataset, manifest, dir: dir.to_path_buf() })
}
