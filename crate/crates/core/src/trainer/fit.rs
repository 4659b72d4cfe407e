// SPDX-License-Identifier: Apache-2.0

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{adam_step, loss, AdamState, TrainConfig, WindowModel};
use crate::error::{Error, Result};
use crate::model::WindowInstance;
use crate::numkit::Rng;
use crate::tensors::Parameters;

/// Windows per gradient partial. Partials are summed in index order, so the
/// result does not depend on how many threads ran them.
const GRAD_CHUNK: usize = 16;
const SHUFFLE_STREAM: u64 = 0x5348_5546;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub epochs: Vec<EpochRecord>,
}

impl LearningCurve {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn val_mse(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_mse).collect()
    }

    pub fn train_mse(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_mse).collect()
    }

    /// `epoch,train_mse,val_mse` with a header row. Wall-clock time is left
    /// out so that reruns produce identical files; see [`Self::timings_csv`].
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_mse,val_mse\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{:e},{:e}\n", e.epoch, e.train_mse, e.val_mse));
        }
        s
    }

    /// `epoch,wall_ms`: elapsed time at the end of each epoch.
    pub fn timings_csv(&self) -> String {
        let mut s = String::from("epoch,wall_ms\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{:.3}\n", e.epoch, e.wall_ms));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome<M> {
    /// Best-validation snapshot when `restore_best`, else the final model.
    pub model: M,
    pub curve: LearningCurve,
    /// 1-based epoch with the lowest validation MSE.
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub stopped_early: bool,
    pub early_stopping_inert: bool,
}

pub fn predict_all<M: WindowModel>(model: &M, windows: &[WindowInstance]) -> Result<Vec<f64>> {
    windows.par_iter().map(|w| model.predict(w)).collect()
}

pub fn evaluate_mse<M: WindowModel>(model: &M, windows: &[WindowInstance]) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty window set".into()));
    }
    let preds = predict_all(model, windows)?;
    let total: f64 = preds.iter().zip(windows).map(|(&p, w)| loss(p, w.y_target)).sum();
    Ok(total / windows.len() as f64)
}

fn batch_gradient<M: WindowModel>(model: &M, batch: &[&WindowInstance]) -> Result<(M::Params, f64)> {
    let partials: Vec<Result<(M::Params, f64)>> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = model.params().zeros_like();
            let mut total = 0.0;
            for w in chunk {
                total += model.accumulate_gradient(w, &mut g)?;
            }
            Ok((g, total))
        })
        .collect();
    let mut partials = partials.into_iter();
    let (mut grads, mut total) = partials.next().expect("non-empty batch")?;
    for p in partials {
        let (g, l) = p?;
        grads.add_scaled(&g, 1.0);
        total += l;
    }
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((grads, total / n))
}

/// Mini-batch Adam on the final-step MSE with early stopping on validation
/// MSE. Shuffling is seeded from `cfg.seed`; the last partial batch is kept.
pub fn fit<M: WindowModel>(
    mut model: M,
    train: &[WindowInstance],
    val: &[WindowInstance],
    cfg: &TrainConfig,
) -> Result<FitOutcome<M>> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Data(format!(
            "training needs non-empty train and validation windows (got {} and {})",
            train.len(),
            val.len()
        )));
    }

    let mut rng = Rng::new(cfg.seed).fork(SHUFFLE_STREAM);
    let mut adam = AdamState::new(model.params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut curve = LearningCurve::default();
    let mut best: Option<(usize, f64, M)> = None;
    let mut wait = 0;
    let mut stopped_early = false;
    let started = Instant::now();

    for epoch in 1..=cfg.max_epochs {
        rng.shuffle(&mut order);
        let mut batches = 0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            batches = b;
            let batch: Vec<&WindowInstance> = idx.iter().map(|&i| &train[i]).collect();
            let (grads, batch_mse) = batch_gradient(&model, &batch).map_err(|e| diverged(e, epoch, b))?;
            if !batch_mse.is_finite() || !grads.all_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b,
                    loss: batch_mse,
                });
            }
            adam_step(&mut adam, model.params_mut(), &grads, cfg);
        }

        let train_mse = evaluate_mse(&model, train).map_err(|e| diverged(e, epoch, batches))?;
        let val_mse = evaluate_mse(&model, val).map_err(|e| diverged(e, epoch, batches))?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: batches,
                loss: train_mse,
            });
        }
        curve.epochs.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });

        let improved = best.as_ref().is_none_or(|(_, v, _)| val_mse < *v);
        if improved {
            best = Some((epoch, val_mse, model.clone()));
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let (best_epoch, best_val_mse, snapshot) = best.expect("at least one epoch ran");
    Ok(FitOutcome {
        model: if cfg.restore_best { snapshot } else { model },
        curve,
        best_epoch,
        best_val_mse,
        stopped_early,
        early_stopping_inert: cfg.early_stopping_inert(),
    })
}

fn diverged(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::Divergence {
            epoch,
            batch,
            loss: f64::NAN,
        },
        other => other,
    }
}
