use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module of the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Range collapsed to zero (or below) where a division by it is needed.
    DegenerateGeometry { range: f64 },
    /// The integrator produced a non-finite state.
    NumericalBlowup { step: usize, time: f64 },
    /// Invalid parameters or mismatched inputs.
    Config(String),
    /// Fewer samples than an operation needs.
    InsufficientData { needed: usize, got: usize },
    /// The linear system for `(N, tau)` has no unique solution.
    Unidentifiable(String),
    /// Tensor or vector shapes do not conform.
    Shape(String),
    /// Training produced a non-finite loss or gradient.
    Divergence { step: u64, loss: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateGeometry { range } => {
                write!(f, "degenerate geometry: range {range} m is not positive")
            }
            Error::NumericalBlowup { step, time } => {
                write!(f, "non-finite state at integration step {step} (t = {time} s)")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need at least {needed} samples, got {got}")
            }
            Error::Unidentifiable(msg) => write!(f, "parameters not identifiable: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Divergence { step, loss } => {
                write!(f, "training diverged at step {step} (loss = {loss})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
