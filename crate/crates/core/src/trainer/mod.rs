// SPDX-License-Identifier: Apache-2.0

//! Exact gradients, Adam, mini-batch training with early stopping, and a
//! finite-difference gradient checker. Everything here is generic over
//! [`WindowModel`], so the residual-memory model and the neural baselines
//! share one training protocol.

mod adam;
mod backward;
mod fit;
mod gradcheck;

pub use adam::{adam_step, AdamState};
pub use backward::{backward, dense_backward};
pub use fit::{evaluate_mse, fit, predict_all, EpochRecord, FitOutcome, LearningCurve};
pub use gradcheck::{grad_check, grad_check_model, grad_check_with, gradcheck_suite, GradCheckReport, SuiteCase, KINKED_TOLERANCE, SMOOTH_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WindowInstance;
use crate::tensors::Parameters;

/// A model trained on windows with the final-step squared error.
pub trait WindowModel: Clone + Send + Sync {
    type Params: Parameters;

    fn params(&self) -> &Self::Params;
    fn params_mut(&mut self) -> &mut Self::Params;

    fn predict(&self, window: &WindowInstance) -> Result<f64>;

    /// Adds `d/dθ (y^_t - y_t)^2` into `grads` and returns the squared error.
    fn accumulate_gradient(&self, window: &WindowInstance, grads: &mut Self::Params) -> Result<f64>;

    /// Tensors excluded from training (their gradient is always zero).
    fn frozen(&self) -> &'static [&'static str] {
        &[]
    }

    fn macs_per_window(&self, w: usize) -> usize;

    fn label(&self) -> String;

    fn parameter_count(&self) -> usize {
        self.params().scalar_count()
    }
}

/// Squared error of one prediction.
#[inline]
pub fn loss(y_hat: f64, y: f64) -> f64 {
    let r = y - y_hat;
    r * r
}

/// Mean of [`loss`] over `(y_hat, y)` pairs.
pub fn batch_loss(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|&(p, y)| loss(p, y)).sum::<f64>() / pairs.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTarget {
    /// Squared error of the prediction step only.
    #[default]
    FinalStepOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub restore_best: bool,
    pub seed: u64,
    pub loss_target: LossTarget,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 3e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            batch_size: 128,
            max_epochs: 50,
            patience: 50,
            restore_best: true,
            seed: 2025,
            loss_target: LossTarget::FinalStepOnly,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must be in [0, 1), got {b}"));
            }
        }
        if !(self.eps_adam > 0.0) {
            return bad(format!("eps_adam must be > 0, got {}", self.eps_adam));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        Ok(())
    }

    /// Early stopping cannot trigger when patience covers the whole budget.
    pub fn early_stopping_inert(&self) -> bool {
        self.patience >= self.max_epochs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_examples() {
        assert_eq!(loss(0.5, 0.5), 0.0);
        assert_eq!(loss(0.0, 1.0), 1.0);
        assert_eq!(batch_loss(&[(0.0, 1.0), (1.0, 1.0)]), 0.5);
    }

    #[test]
    fn config_validation() {
        TrainConfig::default().validate().unwrap();
        assert!(TrainConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { beta2: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().early_stopping_inert());
    }
}
