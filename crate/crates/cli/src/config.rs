// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varnn_core::data::PipelineConfig;
use varnn_core::experiments::{table2_models, AblationAxis, DatasetSource, ExperimentPlan, ModelConfig};
use varnn_core::TrainConfig;

use crate::failure::Failure;

/// Gradient-check suite settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub cases: usize,
    pub seed: u64,
    pub step: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            cases: 100,
            seed: 7,
            step: 1e-6,
        }
    }
}

/// The run configuration file. Everything that affects results lives here;
/// command-line flags only pick the command, paths and verbosity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<AblationAxis>,
    /// Defaults to the main comparison table's models.
    #[serde(default = "table2_models")]
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub gradcheck: GradcheckConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![2025]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        // Relative dataset paths are resolved against the config file.
        if let DatasetSource::Csv { path: data, .. } = &mut cfg.dataset {
            if data.is_relative() {
                let joined = path.parent().map_or_else(|| data.clone(), |dir| dir.join(&*data));
                *data = std::path::absolute(&joined).unwrap_or(joined);
            }
        }
        Ok(cfg)
    }

    pub fn plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            name: self.name.clone(),
            dataset: self.dataset.clone(),
            pipeline: self.pipeline.clone(),
            models: self.models.clone(),
            train: self.train.clone(),
            seeds: self.seeds.clone(),
            axis: self.axis,
        }
    }

    /// `--output`, then `output_dir` from the file, then
    /// `<output root>/<name>`.
    pub fn output_dir(&self, flag: Option<&Path>, root: &Path) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| root.join(&self.name))
    }

    pub fn to_toml(&self) -> Result<String, Failure> {
        toml::to_string(self).map_err(|e| Failure::config(format!("cannot serialize resolved config: {e}")))
    }
}
