// SPDX-License-Identifier: Apache-2.0

//! Residual-memory windowed regression.
//!
//! A feed-forward predictor is unrolled over the labeled steps of a short
//! window. After each step the prediction error (the innovation) is
//! embedded into a memory vector that is fused into the next step's input;
//! the final step predicts the unlabeled target. The crate contains the
//! model, exact backpropagation through the window, Adam training with
//! early stopping, static/lagged/recurrent baselines, the data pipeline,
//! and the experiment harness used for comparisons and ablations.

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numkit;
pub mod tensors;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{MemoryWidth, ResidualMode, Variant, Varnn, VarnnParams, VarnnSpec, WindowInstance};
pub use numkit::{Activation, Mat, Rng};
pub use tensors::Parameters;
pub use trainer::{fit, FitOutcome, LearningCurve, TrainConfig, WindowModel};
