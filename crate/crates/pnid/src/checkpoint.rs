//! Model checkpoints: a TOML manifest (architecture, K, regime values,
//! normalization, optimizer step, training provenance and the tensor table)
//! terminated by a marker line, followed by the named tensors as row-major
//! little-endian `f64` in table order. Optimizer moments are stored as the
//! tensors `adam.m` and `adam.v`.

use std::fs;
use std::path::Path;

use pnid_core::dataset::NormStats;
use pnid_core::nn::{init_model, AdamConfig, AdamState, Head, ModelConfig, ModelParams};
use pnid_core::rng::rng_from_seed;
use serde::{Deserialize, Serialize};

use crate::datafile::{hex_id, parse_id, sha256_hex, Reader};
use crate::error::{format_err, io_err, Result};

pub const FORMAT: &str = "pnid-checkpoint/1";
const MARKER: &[u8] = b"\n#--- tensors ---\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format: String,
    pub optimizer_step: u64,
    pub train_seed: u64,
    /// SHA-256 of the training dataset's sample block.
    pub dataset_sha256: String,
    /// Hex ids of the trajectories the model was trained on.
    pub train_ids: Vec<String>,
    pub model: ModelConfig,
    /// Regime values per group, physical units (empty for the linear head).
    pub regimes: Vec<Vec<f64>>,
    pub norm: NormStats,
    pub optimizer: AdamConfig,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub optimizer: AdamState,
    pub model: ModelConfig,
    pub train_seed: u64,
    pub dataset_sha256: String,
    pub train_ids: Vec<u64>,
}

impl Checkpoint {
    pub fn manifest(&self) -> CheckpointManifest {
        let net = &self.params.network;
        let mut tensors: Vec<TensorEntry> =
            net.tensor_specs().into_iter().map(|(name, rows, cols)| TensorEntry { name, rows, cols }).collect();
        let n = net.param_count();
        tensors.push(TensorEntry { name: "adam.m".into(), rows: n, cols: 1 });
        tensors.push(TensorEntry { name: "adam.v".into(), rows: n, cols: 1 });
        let regimes = match &net.head {
            Head::Immm(bank) => bank.groups.iter().map(|g| g.regimes.clone()).collect(),
            Head::Linear(_) => Vec::new(),
        };
        CheckpointManifest {
            format: FORMAT.into(),
            optimizer_step: self.optimizer.step,
            train_seed: self.train_seed,
            dataset_sha256: self.dataset_sha256.clone(),
            train_ids: self.train_ids.iter().map(|&id| hex_id(id)).collect(),
            model: self.model.clone(),
            regimes,
            norm: self.params.norm.clone(),
            optimizer: self.optimizer.config,
            tensors,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let text = toml::to_string(&self.manifest()).expect("checkpoint manifest always serializes");
        let mut out = format!("# pnid checkpoint\n{text}").into_bytes();
        out.extend_from_slice(MARKER);
        let mut put = |xs: &[f64]| xs.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        for s in self.params.network.slices() {
            put(s);
        }
        put(&self.optimizer.m);
        put(&self.optimizer.v);
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: String| format_err(path, msg);
        let split = bytes
            .windows(MARKER.len())
            .position(|w| w == MARKER)
            .ok_or_else(|| bad("no tensor section marker".into()))?;
        let text = std::str::from_utf8(&bytes[..split]).map_err(|_| bad("manifest is not UTF-8".into()))?;
        let m: CheckpointManifest = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if m.format != FORMAT {
            return Err(bad(format!("unsupported format `{}`", m.format)));
        }
        let mut params = init_model(&m.model, &m.norm, &mut rng_from_seed(0))?;
        if let Head::Immm(bank) = &mut params.network.head {
            if m.regimes.len() != bank.groups.len() {
                return Err(bad(format!("expected {} regime groups, found {}", bank.groups.len(), m.regimes.len())));
            }
            for (g, r) in bank.groups.iter_mut().zip(&m.regimes) {
                if r.len() != g.regimes.len() || r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(bad("regime values do not match the architecture".into()));
                }
                g.regimes.clone_from(r);
            }
        }
        let mut expected: Vec<TensorEntry> = params
            .network
            .tensor_specs()
            .into_iter()
            .map(|(name, rows, cols)| TensorEntry { name, rows, cols })
            .collect();
        let n = params.network.param_count();
        expected.push(TensorEntry { name: "adam.m".into(), rows: n, cols: 1 });
        expected.push(TensorEntry { name: "adam.v".into(), rows: n, cols: 1 });
        if m.tensors.len() != expected.len() {
            return Err(bad(format!("expected {} tensors, manifest lists {}", expected.len(), m.tensors.len())));
        }
        for (got, want) in m.tensors.iter().zip(&expected) {
            if got != want {
                return Err(bad(format!(
                    "tensor `{}` is {}x{}, architecture needs `{}` {}x{}",
                    got.name, got.rows, got.cols, want.name, want.rows, want.cols
                )));
            }
        }
        let mut r = Reader::new(&bytes[split + MARKER.len()..]);
        let mut fill = |dst: &mut [f64], name: &str| -> Result<()> {
            for v in dst.iter_mut() {
                *v = r.f64().ok_or_else(|| bad(format!("tensor section truncated in `{name}`")))?;
            }
            Ok(())
        };
        for (dst, e) in params.network.slices_mut().into_iter().zip(&m.tensors) {
            fill(dst, &e.name)?;
        }
        let mut optimizer = AdamState::new(m.optimizer, &params.network);
        optimizer.step = m.optimizer_step;
        fill(&mut optimizer.m, "adam.m")?;
        fill(&mut optimizer.v, "adam.v")?;
        if !r.done() {
            return Err(bad("trailing bytes after the last tensor".into()));
        }
        params.network.check_shapes()?;
        let train_ids = m
            .train_ids
            .iter()
            .map(|s| parse_id(s).ok_or_else(|| bad(format!("bad trajectory id `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            optimizer,
            model: m.model,
            train_seed: m.train_seed,
            dataset_sha256: m.dataset_sha256,
            train_ids,
        })
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let bytes = self.to_bytes();
        fs::write(path, &bytes).map_err(io_err(path))?;
        Ok(sha256_hex(&bytes))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        Self::from_bytes(&bytes, path)
    }
}
