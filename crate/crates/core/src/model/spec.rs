// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Activation;

/// The four residual-memory configurations.
///
/// `Rm`/`RmAm` refresh the memory from the latest innovation only;
/// `Arm`/`ArmAm` add a persistence term `Wh * h_prev`. The `*Am`
/// variants also feed the previous latent activation into the fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Rm,
    RmAm,
    Arm,
    ArmAm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Rm, Variant::RmAm, Variant::Arm, Variant::ArmAm];

    pub fn has_activation_memory(self) -> bool {
        matches!(self, Variant::RmAm | Variant::ArmAm)
    }

    pub fn is_accumulative(self) -> bool {
        matches!(self, Variant::Arm | Variant::ArmAm)
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Rm => "RM",
            Variant::RmAm => "RM+AM",
            Variant::Arm => "ARM",
            Variant::ArmAm => "ARM+AM",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How the innovation reaches the memory state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// `h = rho(We * e + be)` with trainable `We`, `be`.
    #[default]
    Projected,
    /// `m = 1`, `We = [[1]]`, `be = [0]` frozen and identity activation:
    /// the state is the innovation itself.
    Scalar,
    /// Memory pinned to zero; the predictor sees `[x; 0]`.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarnnSpec {
    pub variant: Variant,
    /// Covariate dimension.
    pub d: usize,
    /// Residual-memory width.
    pub m: usize,
    /// Predictor hidden width.
    pub k: usize,
    pub sigma: Activation,
    pub rho: Activation,
    #[serde(default)]
    pub residual: ResidualMode,
}

impl VarnnSpec {
    /// ReLU predictor and ReLU memory, projected residual.
    pub fn new(variant: Variant, d: usize, m: usize, k: usize) -> Self {
        VarnnSpec {
            variant,
            d,
            m,
            k,
            sigma: Activation::Relu,
            rho: Activation::Relu,
            residual: ResidualMode::Projected,
        }
    }

    pub fn with_activations(mut self, sigma: Activation, rho: Activation) -> Self {
        self.sigma = sigma;
        self.rho = rho;
        self
    }

    pub fn with_residual(mut self, residual: ResidualMode) -> Self {
        if residual == ResidualMode::Scalar {
            self.m = 1;
        }
        self.residual = residual;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::InvalidSpec(format!(
                "d, m, k must be >= 1 (got d={}, m={}, k={})",
                self.d, self.m, self.k
            )));
        }
        if self.residual == ResidualMode::Scalar && self.m != 1 {
            return Err(Error::InvalidSpec(format!("scalar residual requires m = 1, got m = {}", self.m)));
        }
        Ok(())
    }

    /// `d + m`, plus `k` for activation-memory variants.
    pub fn fusion_width(&self) -> usize {
        let base = self.d + self.m;
        if self.variant.has_activation_memory() {
            base + self.k
        } else {
            base
        }
    }

    /// The activation actually applied in the memory update.
    pub fn memory_activation(&self) -> Activation {
        match self.residual {
            ResidualMode::Scalar => Activation::Identity,
            _ => self.rho,
        }
    }

    pub fn label(&self) -> String {
        let mut s = format!("VARNN-{}", self.variant.label());
        match self.residual {
            ResidualMode::Projected => {}
            ResidualMode::Scalar => s.push_str("-scalar"),
            ResidualMode::Disabled => s.push_str("-noresidual"),
        }
        s
    }
}

/// Memory width as configured: a number, `"d"` or `"2d_cap128"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WidthRepr", into = "WidthRepr")]
pub enum MemoryWidth {
    Fixed(usize),
    /// `m = d`.
    MatchInputs,
    /// `m = min(128, 2d)`.
    DoubleInputsCapped,
}

impl MemoryWidth {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MemoryWidth::Fixed(m) => m,
            MemoryWidth::MatchInputs => d,
            MemoryWidth::DoubleInputsCapped => (2 * d).min(128),
        }
    }

    /// The ablation sweep set `{4, 8, 16, 32, 64, min(128, 2d), d}`.
    pub fn sweep_set() -> Vec<MemoryWidth> {
        let mut v: Vec<_> = [4, 8, 16, 32, 64].into_iter().map(MemoryWidth::Fixed).collect();
        v.push(MemoryWidth::DoubleInputsCapped);
        v.push(MemoryWidth::MatchInputs);
        v
    }
}

impl fmt::Display for MemoryWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryWidth::Fixed(m) => write!(f, "{m}"),
            MemoryWidth::MatchInputs => f.write_str("d"),
            MemoryWidth::DoubleInputsCapped => f.write_str("2d_cap128"),
        }
    }
}

impl FromStr for MemoryWidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "d" => Ok(MemoryWidth::MatchInputs),
            "2d_cap128" => Ok(MemoryWidth::DoubleInputsCapped),
            other => match other.parse::<usize>() {
                Ok(m) if m >= 1 => Ok(MemoryWidth::Fixed(m)),
                _ => Err(Error::InvalidSpec(format!(
                    "memory width must be a positive integer, \"d\" or \"2d_cap128\", got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WidthRepr {
    Number(usize),
    Token(String),
}

impl TryFrom<WidthRepr> for MemoryWidth {
    type Error = Error;

    fn try_from(r: WidthRepr) -> Result<Self> {
        match r {
            WidthRepr::Number(0) => Err(Error::InvalidSpec("memory width must be >= 1".into())),
            WidthRepr::Number(m) => Ok(MemoryWidth::Fixed(m)),
            WidthRepr::Token(s) => s.parse(),
        }
    }
}

impl From<MemoryWidth> for WidthRepr {
    fn from(w: MemoryWidth) -> Self {
        match w {
            MemoryWidth::Fixed(m) => WidthRepr::Number(m),
            other => WidthRepr::Token(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fusion_widths() {
        assert_eq!(VarnnSpec::new(Variant::Rm, 3, 2, 5).fusion_width(), 5);
        assert_eq!(VarnnSpec::new(Variant::Arm, 3, 2, 5).fusion_width(), 5);
        assert_eq!(VarnnSpec::new(Variant::RmAm, 3, 2, 5).fusion_width(), 10);
        assert_eq!(VarnnSpec::new(Variant::ArmAm, 3, 2, 5).fusion_width(), 10);
    }

    #[test]
    fn validation() {
        assert!(VarnnSpec::new(Variant::Rm, 0, 1, 1).validate().is_err());
        let mut s = VarnnSpec::new(Variant::Rm, 2, 4, 3);
        s.residual = ResidualMode::Scalar;
        assert!(s.validate().is_err());
        let s = VarnnSpec::new(Variant::Rm, 2, 4, 3).with_residual(ResidualMode::Scalar);
        assert_eq!(s.m, 1);
        s.validate().unwrap();
    }

    #[test]
    fn width_tokens() {
        assert_eq!("d".parse::<MemoryWidth>().unwrap().resolve(27), 27);
        assert_eq!("2d_cap128".parse::<MemoryWidth>().unwrap().resolve(27), 54);
        assert_eq!("2d_cap128".parse::<MemoryWidth>().unwrap().resolve(100), 128);
        assert_eq!("16".parse::<MemoryWidth>().unwrap().resolve(3), 16);
        assert!("0".parse::<MemoryWidth>().is_err());
        assert!("wide".parse::<MemoryWidth>().is_err());
        assert_eq!(MemoryWidth::sweep_set().len(), 7);
    }

    #[test]
    fn width_serde() {
        #[derive(Deserialize)]
        struct W {
            m: MemoryWidth,
        }
        let w: W = serde_json::from_str(r#"{"m": "2d_cap128"}"#).unwrap();
        assert_eq!(w.m, MemoryWidth::DoubleInputsCapped);
        let w: W = serde_json::from_str(r#"{"m": 8}"#).unwrap();
        assert_eq!(w.m, MemoryWidth::Fixed(8));
    }
}
