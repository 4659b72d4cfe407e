// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use rayon::prelude::*;

use super::{Splits, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::model::WindowInstance;

/// Windows of each chronological segment. `val` is empty when the split
/// has no validation share.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitWindows {
    pub train: Vec<WindowInstance>,
    pub val: Vec<WindowInstance>,
    pub test: Vec<WindowInstance>,
}

impl SplitWindows {
    pub fn total(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

/// Sliding windows of length `w` whose every index lies in `range`, one per
/// `stride` steps starting at the first full window.
pub fn make_windows(data: &TimeSeriesDataset, w: usize, stride: usize, range: Range<usize>) -> Result<Vec<WindowInstance>> {
    if w < 2 {
        return Err(Error::Data(format!("window length must be at least 2, got {w}")));
    }
    if stride == 0 {
        return Err(Error::Data("stride must be positive".into()));
    }
    if range.end > data.len() {
        return Err(Error::Data(format!("segment {range:?} exceeds series length {}", data.len())));
    }
    if range.len() < w {
        return Err(Error::Data(format!(
            "segment {range:?} has {} rows, shorter than the window length {w}",
            range.len()
        )));
    }
    if data.has_missing() {
        return Err(Error::Data("windows require a filled dataset".into()));
    }
    let ends: Vec<usize> = (range.start + w - 1..range.end).step_by(stride).collect();
    Ok(ends
        .into_par_iter()
        .map(|t| {
            let start = t + 1 - w;
            WindowInstance {
                xs: (start..=t).map(|i| data.x.row(i).to_vec()).collect(),
                ys_context: data.y[start..t].to_vec(),
                y_target: data.y[t],
                t,
            }
        })
        .collect())
}

pub fn make_split_windows(data: &TimeSeriesDataset, w: usize, stride: usize, splits: &Splits) -> Result<SplitWindows> {
    let val = if splits.val.is_empty() {
        Vec::new()
    } else {
        make_windows(data, w, stride, splits.val.clone())?
    };
    Ok(SplitWindows {
        train: make_windows(data, w, stride, splits.train.clone())?,
        val,
        test: make_windows(data, w, stride, splits.test.clone())?,
    })
}
