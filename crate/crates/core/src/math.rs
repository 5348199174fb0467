//! Scalar math on top of `libm`, physical constants, and the finite-difference
//! helpers shared by sensing and the analytic inversion.

use alloc::vec::Vec;

/// Gravitational acceleration, m/s².
pub const G: f64 = 9.8;
/// Speed of sound used to convert Mach numbers, m/s.
pub const MACH: f64 = 340.0;

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Derivative of uniformly sampled values: central differences in the
/// interior, one-sided at both ends.
pub fn central_difference(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    if n < 2 {
        out.resize(n, 0.0);
        return out;
    }
    for k in 0..n {
        let d = if k == 0 {
            (values[1] - values[0]) / step
        } else if k == n - 1 {
            (values[n - 1] - values[n - 2]) / step
        } else {
            (values[k + 1] - values[k - 1]) / (2.0 * step)
        };
        out.push(d);
    }
    out
}

/// Causal derivative: backward differences, with a forward difference at the
/// first sample (it reads index 1 only).
pub fn backward_difference(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    if n < 2 {
        out.resize(n, 0.0);
        return out;
    }
    out.push((values[1] - values[0]) / step);
    for k in 1..n {
        out.push((values[k] - values[k - 1]) / step);
    }
    out
}

/// Centered moving average of width `width`, truncated symmetrically near the
/// ends so the window never reads past the data.
pub fn centered_moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let n = values.len();
    let half = width.max(1) / 2;
    (0..n)
        .map(|k| {
            let h = half.min(k).min(n - 1 - k);
            let window = &values[k - h..=k + h];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

/// Trailing moving average of width `width` (indices `k - width + 1 ..= k`).
pub fn trailing_moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let width = width.max(1);
    (0..values.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(width);
            let window = &values[lo..=k];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}
