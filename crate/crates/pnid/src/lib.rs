//! File formats, parallel orchestration, experiments and the command line
//! around `pnid-core`.
//!
//! - [`config`]: the TOML run configuration and its presets.
//! - [`datafile`] / [`checkpoint`]: dataset and model files.
//! - [`parallel`]: worker pools; results never depend on the thread count.
//! - [`train`] / [`eval`]: training runs and evaluation experiments.
//! - [`export`]: CSV outputs.
//! - [`cli`]: the `pnid` command.

// NaN must fail validation, hence `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod datafile;
pub mod error;
pub mod eval;
pub mod export;
pub mod parallel;
pub mod reference;
pub mod repro;
pub mod train;

pub use error::{Error, Result};
