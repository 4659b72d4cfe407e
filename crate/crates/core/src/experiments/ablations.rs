// SPDX-License-Identifier: Apache-2.0

use super::plan::{AblationAxis, ExperimentPlan, ModelConfig, VarnnConfig};
use super::runner::{run_plan, ExperimentReport};
use crate::error::Result;
use crate::model::{MemoryWidth, ResidualMode, Variant};
use crate::numkit::Activation;

/// The first residual-memory model in the plan, or the default one.
pub fn base_varnn(plan: &ExperimentPlan) -> VarnnConfig {
    plan.models
        .iter()
        .find_map(|m| match m {
            ModelConfig::Varnn(v) => Some(v.clone()),
            _ => None,
        })
        .unwrap_or_default()
}

fn with(base: &VarnnConfig, f: impl FnOnce(&mut VarnnConfig)) -> ModelConfig {
    let mut v = base.clone();
    f(&mut v);
    ModelConfig::Varnn(v)
}

/// Models for one ablation axis, all derived from `base`.
///
/// * `activation`: memory activation ReLU, then tanh.
/// * `memory_width`: the scalar residual, then each width of the sweep set.
/// * `residual_mode`: no residual (memory pinned to zero), RM, ARM.
/// * `variant`: RM, RM+AM, ARM, ARM+AM.
pub fn ablation_models(axis: AblationAxis, base: &VarnnConfig) -> Vec<ModelConfig> {
    match axis {
        AblationAxis::Activation => [Activation::Relu, Activation::Tanh].into_iter().map(|rho| with(base, |v| v.rho = rho)).collect(),
        AblationAxis::MemoryWidth => memory_width_models(base, &MemoryWidth::sweep_set()),
        AblationAxis::ResidualMode => vec![
            with(base, |v| {
                v.variant = Variant::Rm;
                v.residual = ResidualMode::Disabled;
            }),
            with(base, |v| {
                v.variant = Variant::Rm;
                v.residual = ResidualMode::Projected;
            }),
            with(base, |v| {
                v.variant = Variant::Arm;
                v.residual = ResidualMode::Projected;
            }),
        ],
        AblationAxis::Variant => Variant::ALL.into_iter().map(|variant| with(base, |v| v.variant = variant)).collect(),
    }
}

fn memory_width_models(base: &VarnnConfig, widths: &[MemoryWidth]) -> Vec<ModelConfig> {
    let mut models = vec![with(base, |v| v.residual = ResidualMode::Scalar)];
    models.extend(widths.iter().map(|&m| {
        with(base, |v| {
            v.residual = ResidualMode::Projected;
            v.memory = m;
        })
    }));
    models
}

/// `base` with its model list replaced by the models of `axis`.
pub fn ablation_plan(base: &ExperimentPlan, axis: AblationAxis) -> ExperimentPlan {
    let models = ablation_models(axis, &base_varnn(base));
    ExperimentPlan {
        name: format!("{}-{}", base.name, axis),
        models,
        axis: Some(axis),
        ..base.clone()
    }
}

pub fn run_ablation(base: &ExperimentPlan, axis: AblationAxis) -> Result<ExperimentReport> {
    run_plan(&ablation_plan(base, axis))
}

/// Trains and scores every model of the plan.
pub fn run_table2(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    run_plan(plan)
}

/// Scalar residual against projected memories of the given widths.
pub fn run_memory_width_sweep(base: &ExperimentPlan, widths: &[MemoryWidth]) -> Result<ExperimentReport> {
    let mut plan = ablation_plan(base, AblationAxis::MemoryWidth);
    plan.models = memory_width_models(&base_varnn(base), widths);
    run_plan(&plan)
}

pub fn run_residual_effect(base: &ExperimentPlan) -> Result<ExperimentReport> {
    run_ablation(base, AblationAxis::ResidualMode)
}

pub fn run_activation_ablation(base: &ExperimentPlan) -> Result<ExperimentReport> {
    run_ablation(base, AblationAxis::Activation)
}

pub fn run_variant_comparison(base: &ExperimentPlan) -> Result<ExperimentReport> {
    run_ablation(base, AblationAxis::Variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::runner::swept_value;

    #[test]
    fn memory_width_axis_has_one_model_per_width_plus_scalar() {
        let models = ablation_models(AblationAxis::MemoryWidth, &VarnnConfig::default());
        let swept: Vec<_> = models.iter().map(|m| swept_value(AblationAxis::MemoryWidth, m).unwrap()).collect();
        assert_eq!(swept, ["scalar", "4", "8", "16", "32", "64", "2d_cap128", "d"]);
    }

    #[test]
    fn variant_axis_order() {
        let models = ablation_models(AblationAxis::Variant, &VarnnConfig::default());
        let labels: Vec<_> = models.iter().map(|m| m.to_string()).collect();
        assert_eq!(labels, ["VARNN-RM", "VARNN-RM+AM", "VARNN-ARM", "VARNN-ARM+AM"]);
    }

    #[test]
    fn residual_axis() {
        let models = ablation_models(AblationAxis::ResidualMode, &VarnnConfig::default());
        let swept: Vec<_> = models.iter().map(|m| swept_value(AblationAxis::ResidualMode, m).unwrap()).collect();
        assert_eq!(swept, ["none", "RM", "ARM"]);
    }
}
