// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WindowInstance;
use crate::numkit::Mat;

/// Which part of a window a feature-vector model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// `x_t` only.
    Current,
    /// `[x_{t-w+1} .. x_{t-1}; y_{t-w+1} .. y_{t-1}; x_t]`.
    Lagged,
}

impl FeatureMode {
    pub fn width(self, d: usize, w: usize) -> usize {
        match self {
            FeatureMode::Current => d,
            FeatureMode::Lagged => (w - 1) * (d + 1) + d,
        }
    }

    pub fn features(self, window: &WindowInstance) -> Vec<f64> {
        match self {
            FeatureMode::Current => window.current_x().to_vec(),
            FeatureMode::Lagged => lagged_features(window),
        }
    }
}

/// Covariate lags oldest-first, then target lags oldest-first, then the
/// current covariates.
pub fn lagged_features(window: &WindowInstance) -> Vec<f64> {
    let w = window.len();
    let d = window.current_x().len();
    let mut row = Vec::with_capacity((w - 1) * (d + 1) + d);
    for x in &window.xs[..w - 1] {
        row.extend_from_slice(x);
    }
    row.extend_from_slice(&window.ys_context);
    row.extend_from_slice(window.current_x());
    row
}

/// Feature matrix (one row per window) and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDesign {
    pub features: Mat,
    pub targets: Vec<f64>,
}

pub fn build_design(windows: &[WindowInstance], mode: FeatureMode) -> Result<LaggedDesign> {
    let first = windows
        .first()
        .ok_or_else(|| Error::Data("no windows to build a design from".into()))?;
    if first.len() < 2 {
        return Err(Error::Data(format!("window length must be >= 2, got {}", first.len())));
    }
    let width = mode.width(first.current_x().len(), first.len());
    let mut data = Vec::with_capacity(windows.len() * width);
    for w in windows {
        let row = mode.features(w);
        if row.len() != width {
            return Err(Error::shape("design row", width, row.len()));
        }
        data.extend_from_slice(&row);
    }
    Ok(LaggedDesign {
        features: Mat::from_vec(windows.len(), width, data)?,
        targets: windows.iter().map(|w| w.y_target).collect(),
    })
}

/// ARX/NARX design over the given windows.
pub fn build_lagged_design(windows: &[WindowInstance]) -> Result<LaggedDesign> {
    build_design(windows, FeatureMode::Lagged)
}
