//! Latin hypercube designs.
//!
//! For `n` points in `d` dimensions, each axis is cut into `n` equal strata
//! and every stratum of every axis holds exactly one point. The stratum
//! assignment is an independent random permutation per axis; the position
//! inside a stratum is uniform jitter.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{config, Result};

/// Stratum assignment of an `n × dims` design, before jitter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LhsDesign {
    n: usize,
    dims: usize,
    /// `strata[i * dims + k]` is the stratum of point `i` on axis `k`.
    strata: Vec<usize>,
}

impl LhsDesign {
    pub fn new<R: Rng + ?Sized>(n: usize, dims: usize, rng: &mut R) -> Self {
        let mut strata = alloc::vec![0; n * dims];
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..dims {
            perm.shuffle(rng);
            for (i, &s) in perm.iter().enumerate() {
                strata[i * dims + k] = s;
            }
        }
        Self { n, dims, strata }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn stratum(&self, point: usize, axis: usize) -> usize {
        self.strata[point * self.dims + axis]
    }

    /// Point `i` in the unit cube with fresh jitter from `rng`.
    pub fn point<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Vec<f64> {
        (0..self.dims)
            .map(|k| {
                let u: f64 = rng.random();
                (self.stratum(i, k) as f64 + u) / self.n as f64
            })
            .collect()
    }
}

/// `n` Latin hypercube points in `[0, 1)^dims`.
pub fn lhs_unit<R: Rng + ?Sized>(n: usize, dims: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(config("Latin hypercube needs at least one point"));
    }
    let design = LhsDesign::new(n, dims, rng);
    Ok((0..n).map(|i| design.point(i, rng)).collect())
}

/// `n` distinct integers from `lo..=hi`, one from each of `n` contiguous
/// strata whose sizes differ by at most one. Sorted ascending.
pub fn stratified_indices<R: Rng + ?Sized>(lo: usize, hi: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if hi < lo {
        return Err(config("empty index range"));
    }
    let span = hi - lo + 1;
    if n == 0 || n > span {
        return Err(config(alloc::format!("cannot place {n} stratified indices in a range of {span}")));
    }
    Ok((0..n)
        .map(|k| {
            let start = lo + k * span / n;
            let end = lo + (k + 1) * span / n;
            rng.random_range(start..end)
        })
        .collect())
}

/// Stratum boundaries used by [`stratified_indices`].
pub fn index_strata(lo: usize, hi: usize, n: usize) -> Vec<(usize, usize)> {
    let span = hi + 1 - lo;
    (0..n).map(|k| (lo + k * span / n, lo + (k + 1) * span / n)).collect()
}
