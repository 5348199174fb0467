//! Gated recurrent unit layer with reverse-mode gradients through time.
//!
//! ```text
//! r  = sigmoid(W_hr h + W_xr x + b_r)
//! z  = sigmoid(W_hz h + W_xz x + b_z)
//! h~ = tanh(W_hh (r ⊙ h) + W_xh x + b_h)
//! h' = (1 - z) ⊙ h + z ⊙ h~
//! ```
//!
//! `z` is the weight on the new candidate state.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::Matrix;
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct GruLayerParams {
    pub w_hr: Matrix,
    pub w_xr: Matrix,
    pub w_hz: Matrix,
    pub w_xz: Matrix,
    pub w_hh: Matrix,
    pub w_xh: Matrix,
    pub b_r: Vec<f64>,
    pub b_z: Vec<f64>,
    pub b_h: Vec<f64>,
}

impl GruLayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_hr: Matrix::zeros(hidden, hidden),
            w_xr: Matrix::zeros(hidden, input),
            w_hz: Matrix::zeros(hidden, hidden),
            w_xz: Matrix::zeros(hidden, input),
            w_hh: Matrix::zeros(hidden, hidden),
            w_xh: Matrix::zeros(hidden, input),
            b_r: vec![0.0; hidden],
            b_z: vec![0.0; hidden],
            b_h: vec![0.0; hidden],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            w_hr: Matrix::glorot(hidden, hidden, rng),
            w_xr: Matrix::glorot(hidden, input, rng),
            w_hz: Matrix::glorot(hidden, hidden, rng),
            w_xz: Matrix::glorot(hidden, input, rng),
            w_hh: Matrix::glorot(hidden, hidden, rng),
            w_xh: Matrix::glorot(hidden, input, rng),
            b_r: vec![0.0; hidden],
            b_z: vec![0.0; hidden],
            b_h: vec![0.0; hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_r.len()
    }

    pub fn input(&self) -> usize {
        self.w_xr.cols
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (h, d) = (self.hidden(), self.input());
        let ok = [&self.w_hr, &self.w_hz, &self.w_hh].iter().all(|m| m.rows == h && m.cols == h)
            && [&self.w_xr, &self.w_xz, &self.w_xh].iter().all(|m| m.rows == h && m.cols == d)
            && self.b_z.len() == h
            && self.b_h.len() == h;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(alloc::format!("GRU layer does not conform to hidden {h}, input {d}")))
        }
    }

    pub(crate) fn tensors(&self) -> [(&'static str, &Matrix); 6] {
        [
            ("w_hr", &self.w_hr),
            ("w_xr", &self.w_xr),
            ("w_hz", &self.w_hz),
            ("w_xz", &self.w_xz),
            ("w_hh", &self.w_hh),
            ("w_xh", &self.w_xh),
        ]
    }
}

/// One GRU step.
pub fn gru_cell_forward(x: &[f64], h_prev: &[f64], p: &GruLayerParams) -> Result<Vec<f64>> {
    p.check_shapes()?;
    if x.len() != p.input() || h_prev.len() != p.hidden() {
        return Err(Error::Shape(alloc::format!(
            "GRU step got x of {} and h of {}, expected {} and {}",
            x.len(),
            h_prev.len(),
            p.input(),
            p.hidden()
        )));
    }
    let h = p.hidden();
    let (mut r, mut z, mut hc, mut out) = (vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]);
    step(p, x, h_prev, &mut r, &mut z, &mut hc, &mut out);
    Ok(out)
}

/// Forward step writing gate activations into caller buffers.
#[inline]
fn step(
    p: &GruLayerParams,
    x: &[f64],
    h_prev: &[f64],
    r: &mut [f64],
    z: &mut [f64],
    hc: &mut [f64],
    h_out: &mut [f64],
) {
    r.copy_from_slice(&p.b_r);
    p.w_hr.matvec_add(h_prev, r);
    p.w_xr.matvec_add(x, r);
    z.copy_from_slice(&p.b_z);
    p.w_hz.matvec_add(h_prev, z);
    p.w_xz.matvec_add(x, z);
    for i in 0..r.len() {
        r[i] = math::sigmoid(r[i]);
        z[i] = math::sigmoid(z[i]);
    }
    // h_out doubles as scratch for r ⊙ h_prev.
    for i in 0..r.len() {
        h_out[i] = r[i] * h_prev[i];
    }
    hc.copy_from_slice(&p.b_h);
    p.w_hh.matvec_add(h_out, hc);
    p.w_xh.matvec_add(x, hc);
    for i in 0..hc.len() {
        hc[i] = math::tanh(hc[i]);
        h_out[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];
    }
}

/// Activations of one layer over a window, kept for the backward pass.
/// All buffers are `steps × hidden`, row-major.
#[derive(Debug, Clone)]
pub(crate) struct LayerTape {
    pub hidden: usize,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub hc: Vec<f64>,
    pub h: Vec<f64>,
}

impl LayerTape {
    pub fn output(&self, t: usize) -> &[f64] {
        &self.h[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn last(&self) -> &[f64] {
        let steps = self.h.len() / self.hidden;
        self.output(steps - 1)
    }
}

/// Unrolls the layer from a zero hidden state over `inputs` (`steps × input`).
pub(crate) fn forward_sequence(p: &GruLayerParams, inputs: &[f64], steps: usize) -> LayerTape {
    let (h, d) = (p.hidden(), p.input());
    let mut tape = LayerTape {
        hidden: h,
        r: vec![0.0; steps * h],
        z: vec![0.0; steps * h],
        hc: vec![0.0; steps * h],
        h: vec![0.0; steps * h],
    };
    let zero = vec![0.0; h];
    for t in 0..steps {
        let x = &inputs[t * d..(t + 1) * d];
        let (done, rest) = tape.h.split_at_mut(t * h);
        let h_prev = if t == 0 { &zero[..] } else { &done[(t - 1) * h..] };
        step(
            p,
            x,
            h_prev,
            &mut tape.r[t * h..(t + 1) * h],
            &mut tape.z[t * h..(t + 1) * h],
            &mut tape.hc[t * h..(t + 1) * h],
            &mut rest[..h],
        );
    }
    tape
}

/// Backpropagates through time. `grad_out` holds dL/dh_t for every step
/// (`steps × hidden`); parameter gradients are accumulated into `grads` and
/// dL/dx_t is returned (`steps × input`).
pub(crate) fn backward_sequence(
    p: &GruLayerParams,
    inputs: &[f64],
    tape: &LayerTape,
    grad_out: &[f64],
    grads: &mut GruLayerParams,
) -> Vec<f64> {
    let (h, d) = (p.hidden(), p.input());
    let steps = tape.h.len() / h;
    let mut dx = vec![0.0; steps * d];
    let zero = vec![0.0; h];
    let mut carry = vec![0.0; h];
    let mut dh = vec![0.0; h];
    let mut da_r = vec![0.0; h];
    let mut da_z = vec![0.0; h];
    let mut da_h = vec![0.0; h];
    let mut rh = vec![0.0; h];
    let mut d_rh = vec![0.0; h];
    for t in (0..steps).rev() {
        let x = &inputs[t * d..(t + 1) * d];
        let h_prev = if t == 0 { &zero[..] } else { tape.output(t - 1) };
        let r = &tape.r[t * h..(t + 1) * h];
        let z = &tape.z[t * h..(t + 1) * h];
        let hc = &tape.hc[t * h..(t + 1) * h];
        for i in 0..h {
            dh[i] = grad_out[t * h + i] + carry[i];
        }
        // carry becomes dL/dh_{t-1}
        for i in 0..h {
            carry[i] = dh[i] * (1.0 - z[i]);
            let dz = dh[i] * (hc[i] - h_prev[i]);
            da_z[i] = dz * z[i] * (1.0 - z[i]);
            let dhc = dh[i] * z[i];
            da_h[i] = dhc * (1.0 - hc[i] * hc[i]);
            rh[i] = r[i] * h_prev[i];
        }
        grads.w_hh.outer_add(&da_h, &rh);
        grads.w_xh.outer_add(&da_h, x);
        d_rh.iter_mut().for_each(|v| *v = 0.0);
        p.w_hh.matvec_t_add(&da_h, &mut d_rh);
        for i in 0..h {
            da_r[i] = d_rh[i] * h_prev[i] * r[i] * (1.0 - r[i]);
            carry[i] += d_rh[i] * r[i];
            grads.b_h[i] += da_h[i];
            grads.b_z[i] += da_z[i];
            grads.b_r[i] += da_r[i];
        }
        grads.w_hz.outer_add(&da_z, h_prev);
        grads.w_xz.outer_add(&da_z, x);
        grads.w_hr.outer_add(&da_r, h_prev);
        grads.w_xr.outer_add(&da_r, x);
        p.w_hz.matvec_t_add(&da_z, &mut carry);
        p.w_hr.matvec_t_add(&da_r, &mut carry);
        let dxt = &mut dx[t * d..(t + 1) * d];
        p.w_xh.matvec_t_add(&da_h, dxt);
        p.w_xz.matvec_t_add(&da_z, dxt);
        p.w_xr.matvec_t_add(&da_r, dxt);
    }
    dx
}
