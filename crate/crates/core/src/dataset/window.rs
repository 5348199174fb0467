//! Window extraction. A window ending at tick `end` covers the most recent
//! `l = min(K, end + 1)` ticks, i.e. everything since launch while fewer than
//! `K` ticks exist and the last `K` afterwards.

use alloc::vec::Vec;

use rand::Rng;

use super::lhs;
use crate::error::{Error, Result};
use crate::sensing::{FeatureSeries, Features};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    /// Index of the last tick (inclusive).
    pub end: usize,
    pub len: usize,
}

impl WindowSpec {
    pub fn start(&self) -> usize {
        self.end + 1 - self.len
    }

    pub fn slice<'a>(&self, features: &'a FeatureSeries) -> &'a [Features] {
        &features.rows[self.start()..=self.end]
    }
}

/// `l = min(K, kappa)` where `kappa` is the number of ticks available.
pub fn window_length(input_steps: usize, available: usize) -> usize {
    input_steps.min(available)
}

pub fn window_ending_at(end: usize, input_steps: usize) -> WindowSpec {
    WindowSpec { end, len: window_length(input_steps, end + 1) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowPolicy {
    /// The single window ending at the last tick.
    Latest,
    /// `count` windows whose end ticks are stratified over every end that
    /// gives at least `min_len` ticks.
    Stratified { count: usize, min_len: usize },
}

pub fn extract_windows<R: Rng + ?Sized>(
    series_len: usize,
    input_steps: usize,
    policy: WindowPolicy,
    rng: &mut R,
) -> Result<Vec<WindowSpec>> {
    match policy {
        WindowPolicy::Latest => {
            if series_len == 0 {
                return Err(Error::InsufficientData { needed: 1, got: 0 });
            }
            Ok(alloc::vec![window_ending_at(series_len - 1, input_steps)])
        }
        WindowPolicy::Stratified { count, min_len } => {
            let min_len = min_len.max(1);
            if series_len < min_len {
                return Err(Error::InsufficientData { needed: min_len, got: series_len });
            }
            let (lo, hi) = (min_len - 1, series_len - 1);
            let count = count.min(hi - lo + 1);
            if count == 0 {
                return Ok(Vec::new());
            }
            let ends = lhs::stratified_indices(lo, hi, count, rng)?;
            Ok(ends.into_iter().map(|end| window_ending_at(end, input_steps)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_history_uses_everything() {
        let mut rng = crate::rng::rng_from_seed(1);
        let w = extract_windows(50, 100, WindowPolicy::Latest, &mut rng).unwrap();
        assert_eq!(w, alloc::vec![WindowSpec { end: 49, len: 50 }]);
        assert_eq!(w[0].start(), 0);
    }

    #[test]
    fn long_history_takes_the_most_recent_k() {
        let w = window_ending_at(149, 100);
        assert_eq!((w.start(), w.end, w.len), (50, 149, 100));
    }

    #[test]
    fn too_short_series_is_reported() {
        let mut rng = crate::rng::rng_from_seed(1);
        let r = extract_windows(5, 100, WindowPolicy::Stratified { count: 3, min_len: 10 }, &mut rng);
        assert_eq!(r, Err(Error::InsufficientData { needed: 10, got: 5 }));
    }
}
