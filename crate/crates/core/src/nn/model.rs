use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::gru::{self, GruLayerParams, LayerTape};
use super::immm::{self, ImmmOutput, RegimeBank};
use super::tensor::Matrix;
use crate::dataset::NormStats;
use crate::error::{config, Error, Result};
use crate::math;
use crate::sensing::{Features, FEATURES};

/// Number of regression targets: `N` and `tau_M`.
pub const OUTPUTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum HeadKind {
    /// Grouped regime bank with per-group softmax.
    Immm,
    /// Plain affine map to normalized outputs.
    Linear,
}

impl HeadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Immm => "immm",
            HeadKind::Linear => "linear",
        }
    }
}

/// Fully connected layer, `out = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self { w: Matrix::zeros(output, input), b: vec![0.0; output] }
    }

    pub fn glorot<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self { w: Matrix::glorot(output, input, rng), b: vec![0.0; output] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Immm(RegimeBank),
    Linear(Dense),
}

impl Head {
    pub fn kind(&self) -> HeadKind {
        match self {
            Head::Immm(_) => HeadKind::Immm,
            Head::Linear(_) => HeadKind::Linear,
        }
    }
}

/// Trainable part of the model: tanh input layer, stacked GRU layers, head.
/// Gradients are represented by the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub input: Dense,
    pub layers: Vec<GruLayerParams>,
    pub head: Head,
}

impl Network {
    pub fn hidden_last(&self) -> usize {
        self.layers.last().map_or(self.input.b.len(), |l| l.hidden())
    }

    /// Same structure with every trainable entry zeroed (regime values kept).
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for s in out.slices_mut() {
            s.iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    /// Trainable tensors in canonical order: name, rows, cols.
    pub fn tensor_specs(&self) -> Vec<(String, usize, usize)> {
        let mut specs = vec![
            (String::from("input.w"), self.input.w.rows, self.input.w.cols),
            (String::from("input.b"), self.input.b.len(), 1),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            for (name, m) in l.tensors() {
                specs.push((format!("gru{i}.{name}"), m.rows, m.cols));
            }
            specs.push((format!("gru{i}.b_r"), l.b_r.len(), 1));
            specs.push((format!("gru{i}.b_z"), l.b_z.len(), 1));
            specs.push((format!("gru{i}.b_h"), l.b_h.len(), 1));
        }
        match &self.head {
            Head::Immm(bank) => {
                for (i, g) in bank.groups.iter().enumerate() {
                    specs.push((format!("head.group{i}.w"), g.w.rows, g.w.cols));
                    specs.push((format!("head.group{i}.b"), g.b.len(), 1));
                }
            }
            Head::Linear(d) => {
                specs.push((String::from("head.linear.w"), d.w.rows, d.w.cols));
                specs.push((String::from("head.linear.b"), d.b.len(), 1));
            }
        }
        specs
    }

    /// Trainable tensors in the order of [`Network::tensor_specs`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.input.w.data, &self.input.b];
        for l in &self.layers {
            out.extend([
                &l.w_hr.data[..],
                &l.w_xr.data,
                &l.w_hz.data,
                &l.w_xz.data,
                &l.w_hh.data,
                &l.w_xh.data,
                &l.b_r,
                &l.b_z,
                &l.b_h,
            ]);
        }
        match &self.head {
            Head::Immm(bank) => {
                for g in &bank.groups {
                    out.push(&g.w.data);
                    out.push(&g.b);
                }
            }
            Head::Linear(d) => {
                out.push(&d.w.data);
                out.push(&d.b);
            }
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let Network { input, layers, head } = self;
        let mut out: Vec<&mut [f64]> = vec![&mut input.w.data, &mut input.b];
        for l in layers.iter_mut() {
            let GruLayerParams { w_hr, w_xr, w_hz, w_xz, w_hh, w_xh, b_r, b_z, b_h } = l;
            out.extend([
                &mut w_hr.data[..],
                &mut w_xr.data,
                &mut w_hz.data,
                &mut w_xz.data,
                &mut w_hh.data,
                &mut w_xh.data,
                &mut b_r[..],
                &mut b_z[..],
                &mut b_h[..],
            ]);
        }
        match head {
            Head::Immm(bank) => {
                for g in bank.groups.iter_mut() {
                    out.push(&mut g.w.data);
                    out.push(&mut g.b);
                }
            }
            Head::Linear(d) => {
                out.push(&mut d.w.data);
                out.push(&mut d.b);
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// `self += other`, entrywise in canonical order.
    pub fn add_assign(&mut self, other: &Network) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn check_shapes(&self) -> Result<()> {
        let mut width = self.input.w.rows;
        if self.input.w.cols != FEATURES || self.input.b.len() != width {
            return Err(Error::Shape(format!("input layer must map {FEATURES} features to {width}")));
        }
        for (i, l) in self.layers.iter().enumerate() {
            l.check_shapes()?;
            if l.input() != width {
                return Err(Error::Shape(format!(
                    "GRU layer {i} expects {} inputs, previous layer gives {width}",
                    l.input()
                )));
            }
            width = l.hidden();
        }
        match &self.head {
            Head::Immm(bank) => {
                if bank.groups.len() != OUTPUTS {
                    return Err(Error::Shape(format!("head must have {OUTPUTS} regime groups")));
                }
                bank.check_shapes(width)
            }
            Head::Linear(d) => {
                if d.w.rows != OUTPUTS || d.w.cols != width || d.b.len() != OUTPUTS {
                    return Err(Error::Shape(format!("linear head must be {OUTPUTS}x{width}")));
                }
                Ok(())
            }
        }
    }
}

/// Architecture and head settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelConfig {
    /// Width of the tanh input layer.
    pub input_width: usize,
    /// Width of each stacked GRU layer.
    pub hidden: Vec<usize>,
    pub head: HeadKind,
    /// Regimes per target for the multiple-model head.
    pub regimes_per_group: usize,
    /// Preset input step `K`.
    pub input_steps: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { input_width: 96, hidden: vec![96, 96, 96], head: HeadKind::Immm, regimes_per_group: 5, input_steps: 100 }
    }
}

/// Network plus the normalization it was trained with and its input step.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub network: Network,
    pub norm: NormStats,
    pub input_steps: usize,
}

/// Builds a freshly initialized model. Input and GRU weights are
/// Glorot-uniform with zero biases, drawn in layer order; the multiple-model
/// head starts with zero gating (uniform regime weights), the linear head
/// with Glorot weights drawn after the backbone. Two models built from the
/// same seed therefore share an identical backbone whatever their head.
pub fn init_model<R: Rng + ?Sized>(cfg: &ModelConfig, norm: &NormStats, rng: &mut R) -> Result<ModelParams> {
    if cfg.hidden.is_empty() || cfg.input_width == 0 || cfg.hidden.contains(&0) {
        return Err(config("model needs a non-empty input layer and at least one GRU layer"));
    }
    if cfg.input_steps == 0 {
        return Err(config("input step K must be at least 1"));
    }
    norm.validate()?;
    let input = Dense::glorot(FEATURES, cfg.input_width, rng);
    let mut layers = Vec::with_capacity(cfg.hidden.len());
    let mut width = cfg.input_width;
    for &h in &cfg.hidden {
        layers.push(GruLayerParams::glorot(width, h, rng));
        width = h;
    }
    let head = match cfg.head {
        HeadKind::Immm => {
            let banks: Vec<Vec<f64>> = (0..OUTPUTS)
                .map(|i| RegimeBank::evenly_spaced(norm.label_min[i], norm.label_max[i], cfg.regimes_per_group))
                .collect();
            Head::Immm(RegimeBank::new(&banks, width)?)
        }
        HeadKind::Linear => Head::Linear(Dense::glorot(width, OUTPUTS, rng)),
    };
    Ok(ModelParams { network: Network { input, layers, head }, norm: norm.clone(), input_steps: cfg.input_steps })
}

/// Model output for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// `[N, tau_M]` in physical units.
    pub physical: [f64; OUTPUTS],
    /// `[N, tau_M]` min-max normalized with the training label statistics.
    pub normalized: [f64; OUTPUTS],
    /// Regime weights per group (multiple-model head only).
    pub weights: Option<Vec<Vec<f64>>>,
}

pub(crate) enum HeadTape {
    Immm(ImmmOutput),
    Linear,
}

pub(crate) struct Tape {
    pub steps: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub layers: Vec<LayerTape>,
    pub head: HeadTape,
    pub normalized: [f64; OUTPUTS],
}

pub(crate) fn forward_tape(params: &ModelParams, window: &[Features]) -> Result<Tape> {
    let steps = window.len();
    if steps == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if steps > params.input_steps {
        return Err(config(format!("window of {steps} steps exceeds the input step K = {}", params.input_steps)));
    }
    let net = &params.network;
    let width = net.input.b.len();
    let mut x = Vec::with_capacity(steps * FEATURES);
    for row in window {
        x.extend_from_slice(row);
    }
    let mut u = vec![0.0; steps * width];
    for t in 0..steps {
        let ut = &mut u[t * width..(t + 1) * width];
        ut.copy_from_slice(&net.input.b);
        net.input.w.matvec_add(&x[t * FEATURES..(t + 1) * FEATURES], ut);
        ut.iter_mut().for_each(|v| *v = math::tanh(*v));
    }
    let mut layers: Vec<LayerTape> = Vec::with_capacity(net.layers.len());
    for l in &net.layers {
        let input = layers.last().map_or(&u[..], |prev| &prev.h[..]);
        let tape = gru::forward_sequence(l, input, steps);
        layers.push(tape);
    }
    let h_last = layers.last().map_or(&u[(steps - 1) * width..], |t| t.last());
    let norm = &params.norm;
    let (head, normalized) = match &net.head {
        Head::Immm(bank) => {
            let out = immm::immm_forward(h_last, bank)?;
            let mut y = [0.0; OUTPUTS];
            for i in 0..OUTPUTS {
                y[i] = (out.outputs[i] - norm.label_min[i]) / (norm.label_max[i] - norm.label_min[i]);
            }
            (HeadTape::Immm(out), y)
        }
        Head::Linear(d) => {
            let mut y = [0.0; OUTPUTS];
            y.copy_from_slice(&d.b);
            d.w.matvec_add(h_last, &mut y);
            (HeadTape::Linear, y)
        }
    };
    Ok(Tape { steps, x, u, layers, head, normalized })
}

/// Runs the model on one normalized window (`1 <= len <= K`) from a zero
/// hidden state and reports physical-unit estimates.
pub fn model_forward(params: &ModelParams, window: &[Features]) -> Result<Estimate> {
    let tape = forward_tape(params, window)?;
    let norm = &params.norm;
    let (physical, weights) = match tape.head {
        HeadTape::Immm(out) => {
            let mut p = [0.0; OUTPUTS];
            p.copy_from_slice(&out.outputs);
            (p, Some(out.weights))
        }
        HeadTape::Linear => {
            let mut p = [0.0; OUTPUTS];
            for i in 0..OUTPUTS {
                p[i] = norm.denormalize_label(i, tape.normalized[i]);
            }
            (p, None)
        }
    };
    Ok(Estimate { physical, normalized: tape.normalized, weights })
}

/// Squared-error loss of one window against a normalized target, averaged
/// over the outputs.
pub fn sample_loss(params: &ModelParams, window: &[Features], target: &[f64; OUTPUTS]) -> Result<f64> {
    let tape = forward_tape(params, window)?;
    Ok(loss_of(&tape.normalized, target))
}

fn loss_of(pred: &[f64; OUTPUTS], target: &[f64; OUTPUTS]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / OUTPUTS as f64
}

/// Loss of one sample and its full gradient, written into `grads` (which is
/// overwritten, not accumulated).
pub fn loss_and_grad(
    params: &ModelParams,
    window: &[Features],
    target: &[f64; OUTPUTS],
    grads: &mut Network,
) -> Result<f64> {
    let tape = forward_tape(params, window)?;
    for s in grads.slices_mut() {
        s.iter_mut().for_each(|v| *v = 0.0);
    }
    let net = &params.network;
    let norm = &params.norm;
    let loss = loss_of(&tape.normalized, target);
    let mut dy = [0.0; OUTPUTS];
    for i in 0..OUTPUTS {
        dy[i] = 2.0 * (tape.normalized[i] - target[i]) / OUTPUTS as f64;
    }
    let steps = tape.steps;
    let width = net.input.b.len();
    let h_last: &[f64] = tape.layers.last().map_or(&tape.u[(steps - 1) * width..], |t| t.last());
    let dh_last = match (&net.head, &tape.head, &mut grads.head) {
        (Head::Immm(bank), HeadTape::Immm(out), Head::Immm(gbank)) => {
            let mut d_out = [0.0; OUTPUTS];
            for i in 0..OUTPUTS {
                d_out[i] = dy[i] / (norm.label_max[i] - norm.label_min[i]);
            }
            immm::immm_backward(h_last, bank, out, &d_out, gbank)
        }
        (Head::Linear(d), HeadTape::Linear, Head::Linear(gd)) => {
            gd.w.outer_add(&dy, h_last);
            for (b, g) in gd.b.iter_mut().zip(&dy) {
                *b += g;
            }
            let mut dh = vec![0.0; h_last.len()];
            d.w.matvec_t_add(&dy, &mut dh);
            dh
        }
        _ => return Err(Error::Shape("gradient buffer head does not match the model head".into())),
    };

    // Top layer receives gradient only at the last step.
    let top_width = dh_last.len();
    let mut grad_out = vec![0.0; steps * top_width];
    grad_out[(steps - 1) * top_width..].copy_from_slice(&dh_last);
    for j in (0..net.layers.len()).rev() {
        let input: &[f64] = if j == 0 { &tape.u } else { &tape.layers[j - 1].h };
        grad_out = gru::backward_sequence(&net.layers[j], input, &tape.layers[j], &grad_out, &mut grads.layers[j]);
    }
    // grad_out is now dL/du, steps × width.
    let mut da = vec![0.0; width];
    for t in 0..steps {
        let ut = &tape.u[t * width..(t + 1) * width];
        let dut = &grad_out[t * width..(t + 1) * width];
        for i in 0..width {
            da[i] = dut[i] * (1.0 - ut[i] * ut[i]);
            grads.input.b[i] += da[i];
        }
        grads.input.w.outer_add(&da, &tape.x[t * FEATURES..(t + 1) * FEATURES]);
    }
    Ok(loss)
}
