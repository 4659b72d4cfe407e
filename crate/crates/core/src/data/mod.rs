// SPDX-License-Identifier: Apache-2.0

//! Series ingestion and preparation: CSV loading, chronological splits,
//! train-only min-max scaling, missing-value fill, sliding windows, a
//! window cache, and seeded synthetic non-stationary generators.

mod cache;
mod csv_io;
mod fill;
mod scaler;
mod synthetic;
mod windows;

pub use cache::{cache_key, decode_windows, encode_windows, read_window_cache, window_fingerprint, write_window_cache};
pub use csv_io::{load_csv, write_csv, CsvOptions};
pub use fill::{fill_missing, FillStrategy};
pub use scaler::{ColumnScaler, ScalerState};
pub use synthetic::{generate_synthetic, NoiseModel, NoiseSegment, Regime, SyntheticSpec};
pub use windows::{make_split_windows, make_windows, SplitWindows};

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numkit::Mat;

/// Cells whose source value was missing.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingMask {
    /// `T * d`, row-major like `x`.
    pub x: Vec<bool>,
    pub y: Vec<bool>,
}

impl MissingMask {
    pub fn any(&self) -> bool {
        self.x.iter().chain(&self.y).any(|&m| m)
    }
}

/// Aligned covariates and scalar target. Missing cells hold `0.0` in
/// `x`/`y` and are flagged in `missing` until filled.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub target_name: String,
    /// `T x d`
    pub x: Mat,
    pub y: Vec<f64>,
    pub missing: Option<MissingMask>,
    /// Per-row group id (for example a station); missing values are filled
    /// within a group.
    pub groups: Option<Vec<String>>,
    /// Start index of each generating regime (synthetic data only).
    pub regime_boundaries: Vec<usize>,
}

impl TimeSeriesDataset {
    pub fn new(name: impl Into<String>, feature_names: Vec<String>, target_name: impl Into<String>, x: Mat, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::shape("TimeSeriesDataset", format!("{} targets", x.rows()), y.len()));
        }
        if feature_names.len() != x.cols() {
            return Err(Error::shape("TimeSeriesDataset", format!("{} feature names", x.cols()), feature_names.len()));
        }
        Ok(TimeSeriesDataset {
            name: name.into(),
            feature_names,
            target_name: target_name.into(),
            x,
            y,
            missing: None,
            groups: None,
            regime_boundaries: Vec::new(),
        })
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Covariate count `d`.
    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn has_missing(&self) -> bool {
        self.missing.as_ref().is_some_and(MissingMask::any)
    }

    /// SHA-256 over shape, values and missing flags.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.d() as u64).to_le_bytes());
        for v in self.x.as_slice().iter().chain(&self.y) {
            h.update(v.to_le_bytes());
        }
        if let Some(m) = &self.missing {
            let bits: Vec<u8> = m.x.iter().chain(&m.y).map(|&b| b as u8).collect();
            h.update(&bits);
        }
        hex::encode(h.finalize())
    }
}

/// Chronological train / validation / test proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Leading share of the series used for fitting (train + validation).
    pub train_fraction: f64,
    /// Trailing share of that fitting segment held out for validation.
    pub val_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            val_fraction: 0.2,
        }
    }
}

/// Index ranges of the three segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Data(format!("train_fraction must be in (0, 1), got {}", self.train_fraction)));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Data(format!("val_fraction must be in [0, 1), got {}", self.val_fraction)));
        }
        Ok(())
    }

    /// `fit_end = floor(T * train_fraction)`, `val_len = floor(fit_end * val_fraction)`.
    pub fn boundaries(&self, len: usize) -> Result<Splits> {
        self.validate()?;
        let fit_end = (len as f64 * self.train_fraction).floor() as usize;
        let val_len = (fit_end as f64 * self.val_fraction).floor() as usize;
        let train_end = fit_end - val_len;
        Ok(Splits {
            train: 0..train_end,
            val: train_end..fit_end,
            test: fit_end..len,
        })
    }
}

/// Windowing and split settings shared by every model in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub window: usize,
    pub stride: usize,
    pub split: SplitSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window: 5,
            stride: 1,
            split: SplitSpec::default(),
        }
    }
}

/// A scaled, filled dataset and its windows.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: TimeSeriesDataset,
    pub scaler: ScalerState,
    pub splits: Splits,
    pub windows: SplitWindows,
    /// Fingerprint of the dataset before scaling.
    pub source_fingerprint: String,
    pub window_len: usize,
}

/// Split, fit the scaler on the training rows, scale, fill, and window.
pub fn prepare(raw: TimeSeriesDataset, cfg: &PipelineConfig) -> Result<PreparedData> {
    let splits = cfg.split.boundaries(raw.len())?;
    let source_fingerprint = raw.fingerprint();
    let scaler = ScalerState::fit(&raw, splits.train.clone())?;
    let scaled = scaler.transform(&raw)?;
    let dataset = fill_missing(&scaled, FillStrategy::ForwardFillThenZero);
    let windows = make_split_windows(&dataset, cfg.window, cfg.stride, &splits)?;
    Ok(PreparedData {
        dataset,
        scaler,
        splits,
        windows,
        source_fingerprint,
        window_len: cfg.window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_boundaries() {
        let s = SplitSpec::default().boundaries(100).unwrap();
        assert_eq!(s.train, 0..64);
        assert_eq!(s.val, 64..80);
        assert_eq!(s.test, 80..100);
        let s = SplitSpec { train_fraction: 0.8, val_fraction: 0.0 }.boundaries(100).unwrap();
        assert_eq!(s.train, 0..80);
        assert!(s.val.is_empty());
    }

    #[test]
    fn bad_fractions() {
        assert!(SplitSpec { train_fraction: 1.0, val_fraction: 0.2 }.boundaries(10).is_err());
        assert!(SplitSpec { train_fraction: 0.5, val_fraction: -0.1 }.boundaries(10).is_err());
    }
}
