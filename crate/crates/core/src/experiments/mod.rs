// SPDX-License-Identifier: Apache-2.0

//! Comparison and ablation harness.
//!
//! A plan names a dataset, a pipeline, models, a training config and seeds.
//! Every (model, seed) cell is trained on the same prepared windows; the
//! report records MSEs at the best-validation epoch together with the
//! window fingerprints each cell saw.

mod ablations;
mod complexity;
mod output;
mod plan;
mod runner;
mod trained;

pub use ablations::{
    ablation_models, ablation_plan, base_varnn, run_ablation, run_activation_ablation, run_memory_width_sweep, run_residual_effect,
    run_table2, run_variant_comparison,
};
pub use complexity::{complexity_csv, emit_complexity_report, ComplexityRow};
pub use output::{cell_stem, predictions_csv, prepare_output_dir, report_csv, write_json, write_report, ArtifactEntry, ArtifactIndex};
pub use plan::{table2_models, AblationAxis, DatasetSource, SyntheticPreset, ExperimentPlan, ModelConfig, RnnActivation, VarnnConfig, DEFAULT_HIDDEN};
pub use runner::{curve_roughness, median, run_plan, run_prepared, swept_value, CellArtifacts, ExperimentReport, ReportRow, WindowSetInfo};
pub use trained::TrainedModel;
