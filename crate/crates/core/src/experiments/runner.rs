// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{hash_json, AblationAxis, ExperimentPlan, ModelConfig};
use super::trained::TrainedModel;
use crate::baselines::{FeatureMode, LinearRegressor, MeanPredictor, Mlp, MlpSpec, RnnSpec, SimpleRnn};
use crate::data::{prepare, window_fingerprint, PreparedData, Splits};
use crate::error::{Error, Result};
use crate::model::{count_parameters, ResidualMode, Varnn, WindowInstance};
use crate::numkit::Rng;
use crate::trainer::{evaluate_mse, fit, loss, predict_all, LearningCurve, TrainConfig, WindowModel};

/// Fingerprints and sizes of the windows every model in a plan consumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSetInfo {
    pub train: String,
    pub val: String,
    pub test: String,
    pub counts: [usize; 3],
}

impl WindowSetInfo {
    fn of(train: &[WindowInstance], val: &[WindowInstance], test: &[WindowInstance]) -> Self {
        WindowSetInfo {
            train: window_fingerprint(train),
            val: window_fingerprint(val),
            test: window_fingerprint(test),
            counts: [train.len(), val.len(), test.len()],
        }
    }
}

/// One (model, seed) cell. MSEs are in scaled target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub config: ModelConfig,
    pub seed: u64,
    /// Value of the ablation axis this row varies, if any.
    pub swept: Option<String>,
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
    /// 1-based best-validation epoch for trained models.
    pub best_epoch: Option<usize>,
    pub epochs_run: Option<usize>,
    pub stopped_early: bool,
    pub early_stopping_inert: bool,
    pub parameter_count: usize,
    pub macs_per_window: usize,
    /// Hash of the exact windows this cell was trained and scored on.
    pub windows_seen: WindowSetInfo,
    pub config_hash: String,
}

/// Per-cell data kept out of the row table.
#[derive(Debug, Clone, PartialEq)]
pub struct CellArtifacts {
    pub model: TrainedModel,
    pub curve: Option<LearningCurve>,
    pub test_predictions: Vec<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub plan_hash: String,
    pub dataset: String,
    pub dataset_fingerprint: String,
    pub window: usize,
    pub stride: usize,
    pub splits: Splits,
    pub windows: WindowSetInfo,
    pub axis: Option<AblationAxis>,
    pub rows: Vec<ReportRow>,
    /// Test targets and their series indices, aligned with each cell's
    /// predictions.
    #[serde(skip)]
    pub test_targets: Vec<(usize, f64)>,
    #[serde(skip)]
    pub artifacts: Vec<CellArtifacts>,
}

impl ExperimentReport {
    pub fn rows_for<'a>(&'a self, model: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.model == model)
    }

    /// Median test MSE over the seeds of one model label.
    pub fn median_test_mse(&self, model: &str) -> Option<f64> {
        median(self.rows_for(model).map(|r| r.test_mse).collect())
    }

    /// True when every row saw the same windows as the report header.
    pub fn protocol_identical(&self) -> bool {
        self.rows.iter().all(|r| r.windows_seen == self.windows)
    }

    /// Mean squared error of the stored predictions of row `i`.
    pub fn rescore(&self, i: usize) -> f64 {
        let preds = &self.artifacts[i].test_predictions;
        preds.iter().zip(&self.test_targets).map(|(&p, &(_, y))| loss(p, y)).sum::<f64>() / preds.len() as f64
    }
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Sample variance of epoch-to-epoch changes in validation MSE over the
/// second half of the curve, after the initial descent. Larger means more
/// oscillation near convergence.
pub fn curve_roughness(curve: &LearningCurve) -> f64 {
    let v = curve.val_mse();
    let tail = &v[v.len() / 2..];
    let diffs: Vec<f64> = tail.windows(2).map(|p| p[1] - p[0]).collect();
    if diffs.len() < 2 {
        return 0.0;
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64
}

struct Cell {
    row: ReportRow,
    artifacts: CellArtifacts,
}

fn segment(windows: &[WindowInstance], range: &Range<usize>) -> String {
    format!("{} windows over rows {range:?}", windows.len())
}

/// Loads and prepares the plan's data, then trains every (model, seed)
/// cell. Cells run in parallel; rows come back in plan order (models outer,
/// seeds inner).
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let raw = plan.dataset.load()?;
    let prepared = prepare(raw, &plan.pipeline)?;
    run_prepared(plan, &prepared)
}

/// As [`run_plan`] on already prepared data.
pub fn run_prepared(plan: &ExperimentPlan, data: &PreparedData) -> Result<ExperimentReport> {
    plan.validate()?;
    let sets = &data.windows;
    if sets.val.is_empty() && plan.models.iter().any(ModelConfig::is_iterative) {
        return Err(Error::Data(format!(
            "trained models need validation windows; got {}",
            segment(&sets.val, &data.splits.val)
        )));
    }
    let header = WindowSetInfo::of(&sets.train, &sets.val, &sets.test);
    let cells: Vec<(usize, u64)> = (0..plan.models.len()).flat_map(|m| plan.seeds.iter().map(move |&s| (m, s))).collect();
    let results: Vec<Result<Cell>> = cells
        .par_iter()
        .map(|&(m, seed)| run_cell(&plan.models[m], seed, &plan.train, plan.axis, data))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut artifacts = Vec::with_capacity(results.len());
    for r in results {
        let cell = r?;
        rows.push(cell.row);
        artifacts.push(cell.artifacts);
    }
    Ok(ExperimentReport {
        name: plan.name.clone(),
        plan_hash: plan.config_hash(),
        dataset: data.dataset.name.clone(),
        dataset_fingerprint: data.source_fingerprint.clone(),
        window: data.window_len,
        stride: plan.pipeline.stride,
        splits: data.splits.clone(),
        windows: header,
        axis: plan.axis,
        rows,
        test_targets: sets.test.iter().map(|w| (w.t, w.y_target)).collect(),
        artifacts,
    })
}

/// The value of `axis` that a model configuration represents.
pub fn swept_value(axis: AblationAxis, cfg: &ModelConfig) -> Option<String> {
    let ModelConfig::Varnn(v) = cfg else {
        return None;
    };
    Some(match axis {
        AblationAxis::Activation => v.rho.name().to_string(),
        AblationAxis::MemoryWidth => match v.residual {
            ResidualMode::Scalar => "scalar".to_string(),
            _ => v.memory.to_string(),
        },
        AblationAxis::ResidualMode => match v.residual {
            ResidualMode::Disabled => "none".to_string(),
            ResidualMode::Scalar => "scalar".to_string(),
            ResidualMode::Projected => v.variant.label().to_string(),
        },
        AblationAxis::Variant => v.variant.label().to_string(),
    })
}

struct Scored {
    label: String,
    train_mse: f64,
    val_mse: f64,
    test_mse: f64,
    test_predictions: Vec<f64>,
    parameter_count: usize,
    macs_per_window: usize,
    curve: Option<LearningCurve>,
    best_epoch: Option<usize>,
    stopped_early: bool,
    model: TrainedModel,
}

fn train_iterative<M: WindowModel>(model: M, data: &PreparedData, cfg: &TrainConfig, wrap: fn(M) -> TrainedModel) -> Result<Scored> {
    let sets = &data.windows;
    let out = fit(model, &sets.train, &sets.val, cfg)?;
    let model = out.model;
    Ok(Scored {
        label: model.label(),
        train_mse: evaluate_mse(&model, &sets.train)?,
        val_mse: evaluate_mse(&model, &sets.val)?,
        test_mse: evaluate_mse(&model, &sets.test)?,
        test_predictions: predict_all(&model, &sets.test)?,
        parameter_count: model.parameter_count(),
        macs_per_window: model.macs_per_window(data.window_len),
        curve: Some(out.curve),
        best_epoch: Some(out.best_epoch),
        stopped_early: out.stopped_early,
        model: wrap(model),
    })
}

fn closed_form(label: &str, model: TrainedModel, data: &PreparedData, params: usize, macs: usize) -> Scored {
    let predict = |w: &WindowInstance| model.predict(w).expect("closed-form prediction is total");
    let sets = &data.windows;
    let mse = |ws: &[WindowInstance]| {
        if ws.is_empty() {
            f64::NAN
        } else {
            ws.iter().map(|w| loss(predict(w), w.y_target)).sum::<f64>() / ws.len() as f64
        }
    };
    Scored {
        label: label.to_string(),
        train_mse: mse(&sets.train),
        val_mse: mse(&sets.val),
        test_mse: mse(&sets.test),
        test_predictions: sets.test.iter().map(&predict).collect(),
        parameter_count: params,
        macs_per_window: macs,
        curve: None,
        best_epoch: None,
        stopped_early: false,
        model,
    }
}

fn run_cell(cfg: &ModelConfig, seed: u64, train: &TrainConfig, axis: Option<AblationAxis>, data: &PreparedData) -> Result<Cell> {
    let started = Instant::now();
    let d = data.dataset.d();
    let w = data.window_len;
    let sets = &data.windows;
    let train_cfg = TrainConfig { seed, ..train.clone() };
    let mut rng = Rng::new(seed);

    let scored = match cfg {
        ModelConfig::Mean => {
            let m = MeanPredictor::fit(&sets.train);
            closed_form("Mean", TrainedModel::Mean(m), data, 1, 0)
        }
        ModelConfig::LinearStatic | ModelConfig::LinearArx => {
            let mode = if matches!(cfg, ModelConfig::LinearStatic) {
                FeatureMode::Current
            } else {
                FeatureMode::Lagged
            };
            let lr = LinearRegressor::train(&sets.train, mode)?;
            if lr.fit.rank_deficient {
                log::warn!("{}: design matrix is rank deficient; ridge floor applied", lr.label());
            }
            let (label, params, macs) = (lr.label(), lr.parameter_count(), lr.macs_per_window());
            closed_form(label, TrainedModel::Linear(lr), data, params, macs)
        }
        ModelConfig::MlpStatic { hidden } | ModelConfig::MlpNarx { hidden } => {
            let mode = if matches!(cfg, ModelConfig::MlpStatic { .. }) {
                FeatureMode::Current
            } else {
                FeatureMode::Lagged
            };
            train_iterative(Mlp::new(MlpSpec::new(mode, d, w, *hidden), &mut rng)?, data, &train_cfg, TrainedModel::Mlp)?
        }
        ModelConfig::SimpleRnn { hidden, activation } => {
            let spec = RnnSpec {
                d,
                hidden: *hidden,
                activation: activation.0,
            };
            train_iterative(SimpleRnn::new(spec, &mut rng)?, data, &train_cfg, TrainedModel::Rnn)?
        }
        ModelConfig::Varnn(v) => {
            let spec = v.spec(d);
            let scored = train_iterative(Varnn::new(spec.clone(), &mut rng)?, data, &train_cfg, TrainedModel::Varnn)?;
            debug_assert_eq!(scored.parameter_count, count_parameters(&spec));
            scored
        }
    };

    let epochs_run = scored.curve.as_ref().map(LearningCurve::len);
    let row = ReportRow {
        model: scored.label,
        config: cfg.clone(),
        seed,
        swept: axis.and_then(|a| swept_value(a, cfg)),
        train_mse: scored.train_mse,
        val_mse: scored.val_mse,
        test_mse: scored.test_mse,
        best_epoch: scored.best_epoch,
        epochs_run,
        stopped_early: scored.stopped_early,
        early_stopping_inert: cfg.is_iterative() && train_cfg.early_stopping_inert(),
        parameter_count: scored.parameter_count,
        macs_per_window: scored.macs_per_window,
        windows_seen: WindowSetInfo::of(&sets.train, &sets.val, &sets.test),
        config_hash: hash_json(&(cfg, &train_cfg, data.window_len, &data.source_fingerprint)),
    };
    Ok(Cell {
        row,
        artifacts: CellArtifacts {
            model: scored.model,
            curve: scored.curve,
            test_predictions: scored.test_predictions,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    })
}
