// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MissingMask, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::numkit::Mat;

const MISSING_MARKERS: [&str; 3] = ["", "NA", "NaN"];

/// Which columns of a CSV file become the target and covariates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvOptions {
    pub target: String,
    /// Explicit covariate list. When absent, every column other than the
    /// target, timestamp, group and excluded columns is used, in file order.
    pub features: Option<Vec<String>>,
    pub timestamp: Option<String>,
    /// Column holding a group id such as a station name.
    pub group: Option<String>,
    pub exclude: Vec<String>,
}

impl CsvOptions {
    pub fn new(target: impl Into<String>) -> Self {
        CsvOptions {
            target: target.into(),
            ..Default::default()
        }
    }
}

fn parse_cell(path: &Path, row: usize, column: &str, raw: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if MISSING_MARKERS.contains(&s) {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            msg: format!("column {column}: cannot parse {raw:?} as a number"),
        }),
    }
}

/// Reads a headed CSV in file order. Row numbers in errors count the header
/// as row 1.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let index_of = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{}: column {name:?} not found", path.display())))
    };

    let target_idx = index_of(&opts.target)?;
    let ts_idx = opts.timestamp.as_deref().map(index_of).transpose()?;
    let group_idx = opts.group.as_deref().map(index_of).transpose()?;
    for name in &opts.exclude {
        index_of(name)?;
    }
    let feature_idx: Vec<usize> = match &opts.features {
        Some(names) => names.iter().map(|n| index_of(n)).collect::<Result<_>>()?,
        None => {
            let skip: HashSet<usize> = [Some(target_idx), ts_idx, group_idx]
                .into_iter()
                .flatten()
                .chain(opts.exclude.iter().filter_map(|n| header.iter().position(|h| h == n)))
                .collect();
            (0..header.len()).filter(|i| !skip.contains(i)).collect()
        }
    };
    if feature_idx.is_empty() {
        return Err(Error::Data(format!("{}: no covariate columns selected", path.display())));
    }
    let d = feature_idx.len();

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut mask_x = Vec::new();
    let mut mask_y = Vec::new();
    let mut groups = Vec::new();
    let mut last_ts: Option<String> = None;
    let mut non_monotonic = 0usize;

    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                msg: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for &j in &feature_idx {
            let v = parse_cell(path, row, &header[j], &record[j])?;
            x.push(v.unwrap_or(0.0));
            mask_x.push(v.is_none());
        }
        let v = parse_cell(path, row, &header[target_idx], &record[target_idx])?;
        y.push(v.unwrap_or(0.0));
        mask_y.push(v.is_none());
        if let Some(g) = group_idx {
            groups.push(record[g].trim().to_string());
        }
        if let Some(ts) = ts_idx {
            let cur = record[ts].trim().to_string();
            if last_ts.as_ref().is_some_and(|prev| !timestamp_le(prev, &cur)) {
                non_monotonic += 1;
            }
            last_ts = Some(cur);
        }
    }
    if y.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    if non_monotonic > 0 {
        log::warn!("{}: timestamp decreases {non_monotonic} time(s); rows are used in file order", path.display());
    }

    let t = y.len();
    let name = path.file_stem().map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let features = feature_idx.iter().map(|&j| header[j].clone()).collect();
    let mut ds = TimeSeriesDataset::new(name, features, header[target_idx].clone(), Mat::from_vec(t, d, x)?, y)?;
    let mask = MissingMask { x: mask_x, y: mask_y };
    if mask.any() {
        ds.missing = Some(mask);
    }
    if group_idx.is_some() {
        ds.groups = Some(groups);
    }
    Ok(ds)
}

/// Numeric timestamps compare by value; anything else lexically, which is
/// chronological for ISO-8601 strings.
fn timestamp_le(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x <= y,
        _ => a <= b,
    }
}

/// Writes covariates then target; missing cells are written as `NA`.
pub fn write_csv(path: impl AsRef<Path>, data: &TimeSeriesDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = data.feature_names.clone();
    header.push(data.target_name.clone());
    w.write_record(&header)?;
    let d = data.d();
    for i in 0..data.len() {
        let mut rec: Vec<String> = Vec::with_capacity(d + 1);
        for j in 0..d {
            let missing = data.missing.as_ref().is_some_and(|m| m.x[i * d + j]);
            rec.push(if missing { "NA".into() } else { data.x[(i, j)].to_string() });
        }
        let missing = data.missing.as_ref().is_some_and(|m| m.y[i]);
        rec.push(if missing { "NA".into() } else { data.y[i].to_string() });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toy_file() {
        let f = file("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let ds = load_csv(f.path(), &CsvOptions::new("y")).unwrap();
        assert_eq!((ds.len(), ds.d()), (3, 2));
        assert_eq!(ds.feature_names, vec!["a", "b"]);
        assert_eq!(ds.y, vec![3.0, 6.0, 9.0]);
        assert!(ds.missing.is_none());
    }

    #[test]
    fn missing_markers() {
        let f = file("a,b,y\n1,NA,3\n,5,NaN\n");
        let ds = load_csv(f.path(), &CsvOptions::new("y")).unwrap();
        let m = ds.missing.unwrap();
        assert_eq!(m.x, vec![false, true, true, false]);
        assert_eq!(m.y, vec![false, true]);
    }

    #[test]
    fn parse_error_reports_row() {
        let f = file("a,y\n1,2\n3,oops\n");
        match load_csv(f.path(), &CsvOptions::new("y")) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column() {
        let f = file("a,y\n1,2\n");
        assert!(matches!(load_csv(f.path(), &CsvOptions::new("z")), Err(Error::Data(_))));
    }

    #[test]
    fn exclusions_and_groups() {
        let f = file("date,station,a,b,y\n2013-01-01,S1,1,2,3\n2013-01-02,S1,4,5,6\n");
        let opts = CsvOptions {
            target: "y".into(),
            timestamp: Some("date".into()),
            group: Some("station".into()),
            exclude: vec!["b".into()],
            features: None,
        };
        let ds = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.feature_names, vec!["a"]);
        assert_eq!(ds.groups.unwrap(), vec!["S1", "S1"]);
    }

    #[test]
    fn write_then_read() {
        let f = file("a,y\n1.5,NA\n2.25,3\n");
        let ds = load_csv(f.path(), &CsvOptions::new("y")).unwrap();
        let out = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        write_csv(out.path(), &ds).unwrap();
        let back = load_csv(out.path(), &CsvOptions::new("y")).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
        assert_eq!(back.missing, ds.missing);
    }
}
