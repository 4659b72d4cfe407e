// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::numkit::Mat;

/// Min-max statistics of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler {
    pub min: f64,
    pub max: f64,
}

impl ColumnScaler {
    /// Statistics over the finite values yielded; an empty or constant
    /// column maps everything to 0.
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() {
            return ColumnScaler { min: 0.0, max: 0.0 };
        }
        ColumnScaler { min, max }
    }

    pub fn is_constant(&self) -> bool {
        self.max <= self.min
    }

    #[inline]
    pub fn transform(&self, v: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    #[inline]
    pub fn inverse(&self, v: f64) -> f64 {
        if self.is_constant() {
            self.min
        } else {
            v * (self.max - self.min) + self.min
        }
    }
}

/// Per-column statistics for every covariate and the target, fitted on
/// training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub x: Vec<ColumnScaler>,
    pub y: ColumnScaler,
    pub fitted_rows: (usize, usize),
}

impl ScalerState {
    pub fn fit(data: &TimeSeriesDataset, rows: Range<usize>) -> Result<Self> {
        if rows.is_empty() || rows.end > data.len() {
            return Err(Error::Data(format!(
                "scaler needs a non-empty training range within 0..{}, got {rows:?}",
                data.len()
            )));
        }
        let d = data.d();
        let missing = data.missing.as_ref();
        let x = (0..d)
            .map(|j| {
                ColumnScaler::fit(
                    rows.clone()
                        .filter(|&i| missing.is_none_or(|m| !m.x[i * d + j]))
                        .map(|i| data.x[(i, j)]),
                )
            })
            .collect();
        let y = ColumnScaler::fit(
            rows.clone()
                .filter(|&i| missing.is_none_or(|m| !m.y[i]))
                .map(|i| data.y[i]),
        );
        Ok(ScalerState {
            x,
            y,
            fitted_rows: (rows.start, rows.end),
        })
    }

    /// Applies the fitted statistics to every row; missing cells stay 0
    /// and flagged.
    pub fn transform(&self, data: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        let d = data.d();
        if self.x.len() != d {
            return Err(Error::shape("ScalerState::transform", format!("{} columns", self.x.len()), d));
        }
        let missing = data.missing.as_ref();
        let mut values = Vec::with_capacity(data.len() * d);
        for i in 0..data.len() {
            for (j, s) in self.x.iter().enumerate() {
                let is_missing = missing.is_some_and(|m| m.x[i * d + j]);
                values.push(if is_missing { 0.0 } else { s.transform(data.x[(i, j)]) });
            }
        }
        let y = data
            .y
            .iter()
            .enumerate()
            .map(|(i, &v)| if missing.is_some_and(|m| m.y[i]) { 0.0 } else { self.y.transform(v) })
            .collect();
        let mut out = data.clone();
        out.x = Mat::from_vec(data.len(), d, values)?;
        out.y = y;
        Ok(out)
    }

    pub fn inverse_transform(&self, data: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        let d = data.d();
        let mut values = Vec::with_capacity(data.len() * d);
        for i in 0..data.len() {
            for (j, s) in self.x.iter().enumerate() {
                values.push(s.inverse(data.x[(i, j)]));
            }
        }
        let mut out = data.clone();
        out.x = Mat::from_vec(data.len(), d, values)?;
        out.y = data.y.iter().map(|&v| self.y.inverse(v)).collect();
        Ok(out)
    }

    pub fn inverse_target(&self, v: f64) -> f64 {
        self.y.inverse(v)
    }
}
