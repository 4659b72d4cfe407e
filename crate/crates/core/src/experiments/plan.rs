// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{generate_synthetic, load_csv, CsvOptions, PipelineConfig, SyntheticSpec, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::model::{MemoryWidth, ResidualMode, Variant, VarnnSpec};
use crate::numkit::Activation;
use crate::trainer::TrainConfig;

pub const DEFAULT_HIDDEN: usize = 128;

fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}

/// Residual-memory model settings; `d` comes from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarnnConfig {
    pub variant: Variant,
    pub memory: MemoryWidth,
    pub hidden: usize,
    pub sigma: Activation,
    pub rho: Activation,
    pub residual: ResidualMode,
}

impl Default for VarnnConfig {
    fn default() -> Self {
        VarnnConfig {
            variant: Variant::Rm,
            memory: MemoryWidth::MatchInputs,
            hidden: DEFAULT_HIDDEN,
            sigma: Activation::Relu,
            rho: Activation::Relu,
            residual: ResidualMode::Projected,
        }
    }
}

impl VarnnConfig {
    pub fn spec(&self, d: usize) -> VarnnSpec {
        VarnnSpec::new(self.variant, d, self.memory.resolve(d), self.hidden)
            .with_activations(self.sigma, self.rho)
            .with_residual(self.residual)
    }
}

/// One entry of a plan's model list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Training-target mean; a floor every model should beat.
    Mean,
    LinearStatic,
    LinearArx,
    MlpStatic {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
    MlpNarx {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
    SimpleRnn {
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default)]
        activation: RnnActivation,
    },
    Varnn(VarnnConfig),
}

/// Newtype so the RNN activation can default to ReLU in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RnnActivation(pub Activation);

impl Default for RnnActivation {
    fn default() -> Self {
        RnnActivation(Activation::Relu)
    }
}

impl ModelConfig {
    pub fn varnn(variant: Variant) -> Self {
        ModelConfig::Varnn(VarnnConfig {
            variant,
            ..VarnnConfig::default()
        })
    }

    /// Whether the model is trained by gradient descent (and so has a
    /// learning curve).
    pub fn is_iterative(&self) -> bool {
        !matches!(self, ModelConfig::Mean | ModelConfig::LinearStatic | ModelConfig::LinearArx)
    }

    pub fn validate(&self) -> Result<()> {
        let hidden = match self {
            ModelConfig::MlpStatic { hidden } | ModelConfig::MlpNarx { hidden } | ModelConfig::SimpleRnn { hidden, .. } => *hidden,
            ModelConfig::Varnn(v) => {
                if let MemoryWidth::Fixed(0) = v.memory {
                    return Err(Error::InvalidSpec("memory width must be >= 1".into()));
                }
                v.hidden
            }
            _ => 1,
        };
        if hidden == 0 {
            return Err(Error::InvalidSpec("hidden width must be >= 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelConfig::Mean => f.write_str("Mean"),
            ModelConfig::LinearStatic => f.write_str("LR"),
            ModelConfig::LinearArx => f.write_str("ARX-LR"),
            ModelConfig::MlpStatic { .. } => f.write_str("MLP"),
            ModelConfig::MlpNarx { .. } => f.write_str("NARX-MLP"),
            ModelConfig::SimpleRnn { .. } => f.write_str("SimpleRNN"),
            ModelConfig::Varnn(v) => f.write_str(&v.spec(1).label()),
        }
    }
}

/// Named synthetic generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticPreset {
    RegimeShift,
    Drift,
    Heteroscedastic,
}

impl SyntheticPreset {
    pub fn spec(self, seed: u64) -> SyntheticSpec {
        match self {
            SyntheticPreset::RegimeShift => SyntheticSpec::regime_shift(seed),
            SyntheticPreset::Drift => SyntheticSpec::drift(seed),
            SyntheticPreset::Heteroscedastic => SyntheticSpec::heteroscedastic(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        target: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timestamp: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<String>,
        #[serde(default)]
        exclude: Vec<String>,
    },
    Synthetic {
        spec: SyntheticSpec,
    },
    Preset {
        preset: SyntheticPreset,
        seed: u64,
    },
}

impl DatasetSource {
    pub fn load(&self) -> Result<TimeSeriesDataset> {
        match self {
            DatasetSource::Csv {
                path,
                target,
                features,
                timestamp,
                group,
                exclude,
            } => {
                if !path.exists() {
                    return Err(Error::Data(format!("dataset file {} does not exist", path.display())));
                }
                let opts = CsvOptions {
                    target: target.clone(),
                    features: features.clone(),
                    timestamp: timestamp.clone(),
                    group: group.clone(),
                    exclude: exclude.clone(),
                };
                load_csv(path, &opts)
            }
            DatasetSource::Synthetic { spec } => generate_synthetic(spec),
            DatasetSource::Preset { preset, seed } => generate_synthetic(&preset.spec(*seed)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    Activation,
    MemoryWidth,
    ResidualMode,
    Variant,
}

impl AblationAxis {
    pub const ALL: [AblationAxis; 4] = [AblationAxis::Activation, AblationAxis::MemoryWidth, AblationAxis::ResidualMode, AblationAxis::Variant];

    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::Activation => "activation",
            AblationAxis::MemoryWidth => "memory_width",
            AblationAxis::ResidualMode => "residual_mode",
            AblationAxis::Variant => "variant",
        }
    }
}

impl fmt::Display for AblationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown ablation axis {s:?}")))
    }
}

/// Everything that determines a comparison's numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub axis: Option<AblationAxis>,
}

fn default_seeds() -> Vec<u64> {
    vec![2025]
}

impl ExperimentPlan {
    pub fn new(name: impl Into<String>, dataset: DatasetSource, models: Vec<ModelConfig>) -> Self {
        ExperimentPlan {
            name: name.into(),
            dataset,
            pipeline: PipelineConfig::default(),
            models,
            train: TrainConfig::default(),
            seeds: default_seeds(),
            axis: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("plan lists no models".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("plan lists no seeds".into()));
        }
        if self.pipeline.window < 2 || self.pipeline.stride == 0 {
            return Err(Error::InvalidConfig("window must be >= 2 and stride >= 1".into()));
        }
        self.pipeline.split.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        self.train.validate()?;
        self.models.iter().try_for_each(ModelConfig::validate)
    }

    /// SHA-256 of the plan's canonical JSON.
    pub fn config_hash(&self) -> String {
        hash_json(self)
    }
}

pub(crate) fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("plan types serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// The models compared in the main results table.
pub fn table2_models() -> Vec<ModelConfig> {
    vec![
        ModelConfig::LinearStatic,
        ModelConfig::MlpStatic { hidden: DEFAULT_HIDDEN },
        ModelConfig::LinearArx,
        ModelConfig::MlpNarx { hidden: DEFAULT_HIDDEN },
        ModelConfig::SimpleRnn {
            hidden: DEFAULT_HIDDEN,
            activation: RnnActivation::default(),
        },
        ModelConfig::varnn(Variant::Rm),
        ModelConfig::varnn(Variant::RmAm),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_config_toml() {
        let src = r#"
            [[models]]
            kind = "linear_arx"

            [[models]]
            kind = "varnn"
            variant = "arm"
            memory = "2d_cap128"
            rho = "tanh"

            [[models]]
            kind = "simple_rnn"
            hidden = 16
        "#;
        #[derive(Deserialize)]
        struct Wrap {
            models: Vec<ModelConfig>,
        }
        let w: Wrap = toml::from_str(src).unwrap();
        assert_eq!(w.models[0], ModelConfig::LinearArx);
        let ModelConfig::Varnn(v) = &w.models[1] else { panic!() };
        assert_eq!(v.variant, Variant::Arm);
        assert_eq!(v.memory, MemoryWidth::DoubleInputsCapped);
        assert_eq!(v.rho, Activation::Tanh);
        assert_eq!(v.hidden, 128);
        assert_eq!(v.spec(27).m, 54);
        assert_eq!(
            w.models[2],
            ModelConfig::SimpleRnn {
                hidden: 16,
                activation: RnnActivation(Activation::Relu)
            }
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ModelConfig>("kind = \"varnn\"\nwidth = 3").is_err());
        assert!(toml::from_str::<ModelConfig>("kind = \"mlp_static\"\nhiden = 3").is_err());
    }

    #[test]
    fn memory_token_d() {
        let cfg = VarnnConfig::default();
        assert_eq!(cfg.spec(27).m, 27);
    }

    #[test]
    fn scalar_config_forces_unit_memory() {
        let cfg = VarnnConfig {
            residual: ResidualMode::Scalar,
            memory: MemoryWidth::Fixed(16),
            ..VarnnConfig::default()
        };
        assert_eq!(cfg.spec(4).m, 1);
    }

    #[test]
    fn plan_hash_changes_with_config() {
        let plan = ExperimentPlan::new("p", DatasetSource::Synthetic { spec: SyntheticSpec::drift(1) }, table2_models());
        let mut other = plan.clone();
        other.train.lr = 1e-3;
        assert_ne!(plan.config_hash(), other.config_hash());
        assert_eq!(plan.config_hash(), plan.clone().config_hash());
    }
}
