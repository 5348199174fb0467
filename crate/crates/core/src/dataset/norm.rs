use crate::error::{config, Result};
use crate::nn::OUTPUTS;
use crate::sensing::{Features, FEATURES};

/// Per-feature and per-label min/max for min-max scaling.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormStats {
    pub feature_min: [f64; FEATURES],
    pub feature_max: [f64; FEATURES],
    pub label_min: [f64; OUTPUTS],
    pub label_max: [f64; OUTPUTS],
}

impl NormStats {
    /// Accumulates extremes over feature rows and labels.
    pub fn fit<'a>(
        rows: impl IntoIterator<Item = &'a Features>,
        labels: impl IntoIterator<Item = &'a [f64; OUTPUTS]>,
    ) -> Result<Self> {
        let mut s = NormStats {
            feature_min: [f64::INFINITY; FEATURES],
            feature_max: [f64::NEG_INFINITY; FEATURES],
            label_min: [f64::INFINITY; OUTPUTS],
            label_max: [f64::NEG_INFINITY; OUTPUTS],
        };
        for row in rows {
            for i in 0..FEATURES {
                s.feature_min[i] = s.feature_min[i].min(row[i]);
                s.feature_max[i] = s.feature_max[i].max(row[i]);
            }
        }
        for l in labels {
            for i in 0..OUTPUTS {
                s.label_min[i] = s.label_min[i].min(l[i]);
                s.label_max[i] = s.label_max[i].max(l[i]);
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let pairs = self.feature_min.iter().zip(&self.feature_max).chain(self.label_min.iter().zip(&self.label_max));
        for (i, (lo, hi)) in pairs.enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(config(alloc::format!(
                    "degenerate normalization statistics for dimension {i}: min {lo}, max {hi}"
                )));
            }
        }
        Ok(())
    }

    pub fn normalize_features(&self, row: &Features) -> Features {
        let mut out = [0.0; FEATURES];
        for i in 0..FEATURES {
            out[i] = normalize(row[i], self.feature_min[i], self.feature_max[i]);
        }
        out
    }

    pub fn denormalize_features(&self, row: &Features) -> Features {
        let mut out = [0.0; FEATURES];
        for i in 0..FEATURES {
            out[i] = denormalize(row[i], self.feature_min[i], self.feature_max[i]);
        }
        out
    }

    pub fn normalize_label(&self, i: usize, v: f64) -> f64 {
        normalize(v, self.label_min[i], self.label_max[i])
    }

    pub fn denormalize_label(&self, i: usize, v: f64) -> f64 {
        denormalize(v, self.label_min[i], self.label_max[i])
    }

    pub fn normalize_labels(&self, label: &[f64; OUTPUTS]) -> [f64; OUTPUTS] {
        let mut out = [0.0; OUTPUTS];
        for i in 0..OUTPUTS {
            out[i] = self.normalize_label(i, label[i]);
        }
        out
    }
}

/// `(v - min) / (max - min)`
#[inline]
pub fn normalize(v: f64, min: f64, max: f64) -> f64 {
    (v - min) / (max - min)
}

#[inline]
pub fn denormalize(v: f64, min: f64, max: f64) -> f64 {
    min + v * (max - min)
}
