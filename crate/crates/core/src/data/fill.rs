// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::TimeSeriesDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillStrategy {
    /// Last observed value in the column (within the row's group); leading
    /// gaps take 0, the floor of the scaled range.
    #[default]
    ForwardFillThenZero,
}

/// Fills flagged cells and clears the mask.
pub fn fill_missing(data: &TimeSeriesDataset, strategy: FillStrategy) -> TimeSeriesDataset {
    let FillStrategy::ForwardFillThenZero = strategy;
    let Some(mask) = data.missing.as_ref() else {
        return data.clone();
    };
    let mut out = data.clone();
    let (t, d) = (data.len(), data.d());
    let group_of = |i: usize| data.groups.as_ref().map_or("", |g| g[i].as_str());

    for j in 0..=d {
        let is_target = j == d;
        let mut last: HashMap<&str, f64> = HashMap::new();
        let mut observed = 0usize;
        for i in 0..t {
            let missing = if is_target { mask.y[i] } else { mask.x[i * d + j] };
            let g = group_of(i);
            if missing {
                let v = last.get(g).copied().unwrap_or(0.0);
                if is_target {
                    out.y[i] = v;
                } else {
                    out.x[(i, j)] = v;
                }
            } else {
                observed += 1;
                let v = if is_target { data.y[i] } else { data.x[(i, j)] };
                last.insert(g, v);
            }
        }
        if observed == 0 && t > 0 {
            let name = if is_target { &data.target_name } else { &data.feature_names[j] };
            log::warn!("column {name} has no observed values; filled with zeros");
        }
    }
    out.missing = None;
    out
}
