// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::lagged::FeatureMode;
use crate::error::{Error, Result};
use crate::model::WindowInstance;
use crate::numkit::{affine, glorot_init, Activation, Mat, Rng};
use crate::tensors::Parameters;
use crate::trainer::{dense_backward, WindowModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: FeatureMode,
    /// Feature width (`d` for static, `(w-1)(d+1)+d` for NARX).
    pub input_width: usize,
    pub hidden: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(input: FeatureMode, d: usize, w: usize, hidden: usize) -> Self {
        MlpSpec {
            input,
            input_width: input.width(d, w),
            hidden,
            activation: Activation::Relu,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden * self.input_width + 2 * self.hidden + 1
    }

    pub fn macs(&self) -> usize {
        self.hidden * self.input_width + self.hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    /// `hidden x input_width`
    pub w1: Mat,
    pub b1: Mat,
    /// `1 x hidden`
    pub w2: Mat,
    pub b2: Mat,
}

impl Parameters for MlpParams {
    fn tensors(&self) -> Vec<(&'static str, &Mat)> {
        vec![("W1", &self.w1), ("b1", &self.b1), ("W2", &self.w2), ("b2", &self.b2)]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        vec![
            ("W1", &mut self.w1),
            ("b1", &mut self.b1),
            ("W2", &mut self.w2),
            ("b2", &mut self.b2),
        ]
    }
}

/// One hidden layer and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: MlpParams,
}

impl Mlp {
    pub fn new(spec: MlpSpec, rng: &mut Rng) -> Result<Self> {
        if spec.input_width == 0 || spec.hidden == 0 {
            return Err(Error::InvalidSpec("MLP widths must be >= 1".into()));
        }
        let params = MlpParams {
            w1: glorot_init(rng, spec.hidden, spec.input_width),
            b1: Mat::zeros(spec.hidden, 1),
            w2: glorot_init(rng, 1, spec.hidden),
            b2: Mat::zeros(1, 1),
        };
        Ok(Mlp { spec, params })
    }

    pub fn zeros(spec: MlpSpec) -> Self {
        let params = MlpParams {
            w1: Mat::zeros(spec.hidden, spec.input_width),
            b1: Mat::zeros(spec.hidden, 1),
            w2: Mat::zeros(1, spec.hidden),
            b2: Mat::zeros(1, 1),
        };
        Mlp { spec, params }
    }

    /// Forward pass on an explicit feature vector.
    pub fn forward_features(&self, features: &[f64]) -> Result<f64> {
        Ok(self.forward_cached(features)?.2)
    }

    fn forward_cached(&self, features: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let pre = affine(&self.params.w1, features, self.params.b1.as_slice())?;
        let u = self.spec.activation.map(&pre);
        let y = affine(&self.params.w2, &u, self.params.b2.as_slice())?[0];
        Ok((pre, u, y))
    }
}

impl WindowModel for Mlp {
    type Params = MlpParams;

    fn params(&self) -> &MlpParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut MlpParams {
        &mut self.params
    }

    fn predict(&self, window: &WindowInstance) -> Result<f64> {
        self.forward_features(&self.spec.input.features(window))
    }

    fn accumulate_gradient(&self, window: &WindowInstance, grads: &mut MlpParams) -> Result<f64> {
        let x = self.spec.input.features(window);
        let (pre, u, y) = self.forward_cached(&x)?;
        let err = y - window.y_target;
        let du = dense_backward(&self.params.w2, &u, &[2.0 * err], &mut grads.w2, Some(&mut grads.b2))?;
        let da: Vec<f64> = du
            .iter()
            .zip(&pre)
            .map(|(g, &a)| g * self.spec.activation.derivative(a))
            .collect();
        dense_backward(&self.params.w1, &x, &da, &mut grads.w1, Some(&mut grads.b1))?;
        Ok(err * err)
    }

    fn macs_per_window(&self, _w: usize) -> usize {
        self.spec.macs()
    }

    fn label(&self) -> String {
        match self.spec.input {
            FeatureMode::Current => "MLP".into(),
            FeatureMode::Lagged => "NARX-MLP".into(),
        }
    }
}
