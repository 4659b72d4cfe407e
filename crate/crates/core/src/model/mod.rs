// SPDX-License-Identifier: Apache-2.0

//! The residual-memory regressor: configuration, parameters, the
//! teacher-forced windowed forward pass, and complexity accounting.

mod complexity;
mod params;
mod rollout;
mod spec;
mod window;

pub use complexity::{count_macs_per_window, count_parameters, feedforward_parameter_count};
pub use params::VarnnParams;
pub use rollout::{fuse, memory_update, predictor_step, rollout, rollout_counted, RolloutTrace, StepRecord};
pub use spec::{MemoryWidth, ResidualMode, Variant, VarnnSpec};
pub use window::WindowInstance;

use crate::error::Result;
use crate::numkit::Rng;

/// A spec together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Varnn {
    pub spec: VarnnSpec,
    pub params: VarnnParams,
}

impl Varnn {
    /// Glorot-initialized weights, zero biases.
    pub fn new(spec: VarnnSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let params = VarnnParams::init(&spec, rng);
        Ok(Varnn { spec, params })
    }

    pub fn from_parts(spec: VarnnSpec, params: VarnnParams) -> Result<Self> {
        spec.validate()?;
        params.check_shapes(&spec)?;
        Ok(Varnn { spec, params })
    }

    pub fn predict(&self, window: &WindowInstance) -> Result<f64> {
        Ok(rollout(&self.spec, &self.params, window)?.prediction())
    }
}
