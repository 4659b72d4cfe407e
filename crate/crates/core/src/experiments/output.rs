// SPDX-License-Identifier: Apache-2.0

//! Report artifacts on disk.
//!
//! A run directory holds `report.json`, `report.csv`, one learning curve
//! per trained cell under `curves/`, test predictions per cell under
//! `predictions/`, fitted parameters per cell under `params/`,
//! `timings.csv`, and `index.json`, which lists every
//! artifact with its SHA-256. Everything except `timings.csv` is a pure
//! function of the plan, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::runner::ExperimentReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub kind: &'static str,
    /// Absent for files with wall-clock content.
    pub sha256: Option<String>,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactIndex {
    pub name: String,
    pub plan_hash: String,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Creates `dir`, refusing to reuse a non-empty directory unless
/// `overwrite` is set (in which case its contents are removed first).
pub fn prepare_output_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)?.next().is_some();
        if occupied && !overwrite {
            return Err(Error::InvalidConfig(format!(
                "output directory {} is not empty; pass --overwrite to replace it",
                dir.display()
            )));
        }
        if occupied {
            fs::remove_dir_all(dir)?;
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' }).collect()
}

pub fn report_csv(report: &ExperimentReport) -> String {
    let mut s = String::from(
        "model,swept,seed,train_mse,val_mse,test_mse,best_epoch,epochs_run,stopped_early,early_stopping_inert,parameters,macs_per_window,config_hash\n",
    );
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    for r in &report.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.model,
            r.swept.as_deref().unwrap_or(""),
            r.seed,
            r.train_mse,
            r.val_mse,
            r.test_mse,
            opt(r.best_epoch),
            opt(r.epochs_run),
            r.stopped_early,
            r.early_stopping_inert,
            r.parameter_count,
            r.macs_per_window,
            r.config_hash
        ));
    }
    s
}

/// `window_index,t,y_true,y_pred` for one cell.
pub fn predictions_csv(report: &ExperimentReport, cell: usize) -> String {
    let mut s = String::from("window_index,t,y_true,y_pred\n");
    for (i, ((t, y), p)) in report.test_targets.iter().zip(&report.artifacts[cell].test_predictions).enumerate() {
        s.push_str(&format!("{i},{t},{y},{p}\n"));
    }
    s
}

pub fn cell_stem(report: &ExperimentReport, i: usize) -> String {
    let r = &report.rows[i];
    let mut stem = format!("{i:03}-{}", slug(&r.model));
    if let Some(v) = &r.swept {
        stem.push('-');
        stem.push_str(&slug(v));
    }
    format!("{stem}-s{}", r.seed)
}

struct Writer {
    root: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Writer {
    fn put(&mut self, rel: &str, kind: &'static str, body: &[u8], hashed: bool, config_hash: Option<&str>) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, body)?;
        self.entries.push(ArtifactEntry {
            path: rel.to_string(),
            kind,
            sha256: hashed.then(|| hex::encode(Sha256::digest(body))),
            config_hash: config_hash.map(str::to_string),
        });
        Ok(())
    }
}

/// Writes all artifacts of `report` into `dir` (which must already be
/// prepared) and returns the index.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<ArtifactIndex> {
    let mut w = Writer {
        root: dir.to_path_buf(),
        entries: Vec::new(),
    };
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    w.put("report.json", "report", json.as_bytes(), true, Some(&report.plan_hash))?;
    w.put("report.csv", "report", report_csv(report).as_bytes(), true, Some(&report.plan_hash))?;

    let mut timings = String::from("cell,model,seed,wall_ms\n");
    for i in 0..report.rows.len() {
        let stem = cell_stem(report, i);
        let row = &report.rows[i];
        let art = &report.artifacts[i];
        if let Some(curve) = &art.curve {
            w.put(&format!("curves/{stem}.csv"), "curve", curve.to_csv().as_bytes(), true, Some(&row.config_hash))?;
        }
        w.put(
            &format!("predictions/{stem}.csv"),
            "predictions",
            predictions_csv(report, i).as_bytes(),
            true,
            Some(&row.config_hash),
        )?;
        w.put(
            &format!("params/{stem}.json"),
            "params",
            art.model.params_json()?.as_bytes(),
            true,
            Some(&row.config_hash),
        )?;
        timings.push_str(&format!("{i},{},{},{:.3}\n", row.model, row.seed, art.wall_ms));
    }
    w.put("timings.csv", "timings", timings.as_bytes(), false, None)?;

    let index = ArtifactIndex {
        name: report.name.clone(),
        plan_hash: report.plan_hash.clone(),
        artifacts: w.entries,
    };
    let mut body = serde_json::to_string_pretty(&index)?;
    body.push('\n');
    fs::write(dir.join("index.json"), body)?;
    Ok(index)
}

/// Writes `value` as pretty JSON beside the other outputs.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_to_clobber() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        prepare_output_dir(&out, false).unwrap();
        fs::write(out.join("x"), "1").unwrap();
        assert!(matches!(prepare_output_dir(&out, false), Err(Error::InvalidConfig(_))));
        prepare_output_dir(&out, true).unwrap();
        assert!(!out.join("x").exists());
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("VARNN-RM+AM"), "varnn-rm-am");
    }
}
