// SPDX-License-Identifier: Apache-2.0

//! Comparison models fed from the same windows as the residual-memory
//! model: closed-form static and lagged (ARX) linear regression, static and
//! lagged (NARX) MLPs, and a single-layer Elman RNN.

mod lagged;
mod linear;
mod mlp;
mod rnn;

pub use lagged::{build_design, build_lagged_design, lagged_features, FeatureMode, LaggedDesign};
pub use linear::{fit_linear_least_squares, LinearFit, LinearRegressor};
pub use mlp::{Mlp, MlpParams, MlpSpec};
pub use rnn::{rnn_rollout, RnnParams, RnnSpec, SimpleRnn};

use crate::model::WindowInstance;

/// Predicts the training-target mean for every window.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPredictor {
    pub mean: f64,
}

impl MeanPredictor {
    pub fn fit(train: &[WindowInstance]) -> Self {
        let mean = train.iter().map(|w| w.y_target).sum::<f64>() / train.len().max(1) as f64;
        MeanPredictor { mean }
    }

    pub fn predict(&self, _window: &WindowInstance) -> f64 {
        self.mean
    }
}
