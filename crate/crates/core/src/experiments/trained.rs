// SPDX-License-Identifier: Apache-2.0

use super::plan::ModelConfig;
use crate::baselines::{FeatureMode, LinearFit, LinearRegressor, MeanPredictor, Mlp, MlpSpec, RnnSpec, SimpleRnn};
use crate::error::{Error, Result};
use crate::model::{Varnn, VarnnParams, WindowInstance};
use crate::numkit::Mat;
use crate::tensors::{decode_json, encode_json, load_into, Parameters};
use crate::trainer::WindowModel;

/// A fitted model of any kind a plan can list.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Mean(MeanPredictor),
    Linear(LinearRegressor),
    Mlp(Mlp),
    Rnn(SimpleRnn),
    Varnn(Varnn),
}

/// Closed-form models stored in the same tensor format as trained ones.
#[derive(Clone)]
struct DenseHead {
    weights: Mat,
    bias: Mat,
}

impl Parameters for DenseHead {
    fn tensors(&self) -> Vec<(&'static str, &Mat)> {
        vec![("w", &self.weights), ("b", &self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        vec![("w", &mut self.weights), ("b", &mut self.bias)]
    }
}

fn feature_mode(cfg: &ModelConfig) -> FeatureMode {
    match cfg {
        ModelConfig::LinearStatic | ModelConfig::MlpStatic { .. } => FeatureMode::Current,
        _ => FeatureMode::Lagged,
    }
}

impl TrainedModel {
    pub fn predict(&self, window: &WindowInstance) -> Result<f64> {
        match self {
            TrainedModel::Mean(m) => Ok(m.predict(window)),
            TrainedModel::Linear(m) => Ok(m.predict(window)),
            TrainedModel::Mlp(m) => m.predict(window),
            TrainedModel::Rnn(m) => WindowModel::predict(m, window),
            TrainedModel::Varnn(m) => m.predict(window),
        }
    }

    /// Parameters in the JSON tensor layout.
    pub fn params_json(&self) -> Result<String> {
        match self {
            TrainedModel::Mean(m) => encode_json(&DenseHead {
                weights: Mat::zeros(1, 0),
                bias: Mat::from_vec(1, 1, vec![m.mean])?,
            }),
            TrainedModel::Linear(m) => encode_json(&DenseHead {
                weights: Mat::from_vec(1, m.fit.weights.len(), m.fit.weights.clone())?,
                bias: Mat::from_vec(1, 1, vec![m.fit.intercept])?,
            }),
            TrainedModel::Mlp(m) => encode_json(m.params()),
            TrainedModel::Rnn(m) => encode_json(m.params()),
            TrainedModel::Varnn(m) => encode_json(&m.params),
        }
    }

    /// Rebuilds the model described by `cfg` for `d` covariates and window
    /// length `w` from [`Self::params_json`] output.
    pub fn load(cfg: &ModelConfig, d: usize, w: usize, json: &str) -> Result<Self> {
        let decoded = decode_json(json)?;
        Ok(match cfg {
            ModelConfig::Mean | ModelConfig::LinearStatic | ModelConfig::LinearArx => {
                let width = if matches!(cfg, ModelConfig::Mean) { 0 } else { feature_mode(cfg).width(d, w) };
                let mut head = DenseHead {
                    weights: Mat::zeros(1, width),
                    bias: Mat::zeros(1, 1),
                };
                load_into(&mut head, decoded)?;
                let intercept = head.bias.as_slice()[0];
                if matches!(cfg, ModelConfig::Mean) {
                    TrainedModel::Mean(MeanPredictor { mean: intercept })
                } else {
                    TrainedModel::Linear(LinearRegressor {
                        mode: feature_mode(cfg),
                        fit: LinearFit {
                            weights: head.weights.as_slice().to_vec(),
                            intercept,
                            rank_deficient: false,
                        },
                    })
                }
            }
            ModelConfig::MlpStatic { hidden } | ModelConfig::MlpNarx { hidden } => {
                let mut m = Mlp::zeros(MlpSpec::new(feature_mode(cfg), d, w, *hidden));
                load_into(m.params_mut(), decoded)?;
                TrainedModel::Mlp(m)
            }
            ModelConfig::SimpleRnn { hidden, activation } => {
                let mut m = SimpleRnn::zeros(RnnSpec {
                    d,
                    hidden: *hidden,
                    activation: activation.0,
                });
                load_into(m.params_mut(), decoded)?;
                TrainedModel::Rnn(m)
            }
            ModelConfig::Varnn(v) => {
                let spec = v.spec(d);
                let mut params = VarnnParams::zeros(&spec);
                load_into(&mut params, decoded)?;
                TrainedModel::Varnn(Varnn::from_parts(spec, params).map_err(|e| Error::Format(e.to_string()))?)
            }
        })
    }
}
