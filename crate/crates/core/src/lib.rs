//! Planar missile-vs-aircraft engagement simulation and missile parameter
//! identification.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs (and an explicit seed where randomness is involved); file
//! formats, parallel orchestration and the command line live in the `pnid`
//! crate.
//!
//! Modules:
//! - [`sim`]: PN-guided missile vs. bang-bang aircraft, fixed-step RK4.
//! - [`sensing`]: discrete noisy radar samples and LOS-rate estimation.
//! - [`analytic`]: closed-form kinematic inversion and the linear `(N, tau)` solve.
//! - [`nn`]: GRU regression network with a grouped multiple-model output head.
//! - [`dataset`]: Latin hypercube sampling, window extraction, min-max scaling.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation; fixed-size
// per-output arrays read clearer with an index.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod dataset;
pub mod error;
pub mod math;
pub mod nn;
pub mod rng;
pub mod sensing;
pub mod sim;

pub use error::{Error, Result};
