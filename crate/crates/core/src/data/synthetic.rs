// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::numkit::{Mat, Rng};

/// Coefficients in force from `start` until the next regime begins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    pub start: usize,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSegment {
    pub start: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    Homoscedastic { sigma: f64 },
    Heteroscedastic { schedule: Vec<NoiseSegment> },
}

impl NoiseModel {
    fn sigma_at(&self, t: usize) -> f64 {
        match self {
            NoiseModel::Homoscedastic { sigma } => *sigma,
            NoiseModel::Heteroscedastic { schedule } => schedule.iter().rev().find(|s| s.start <= t).map_or(0.0, |s| s.sigma),
        }
    }
}

/// Generator for `y_t = (beta_r + drift * t / T) . x_t + gamma * y_{t-1} + sigma(t) * eps_t`
/// with `x_t ~ U[0, 1]^d` and `eps_t ~ N(0, 1)`.
///
/// `drift_rate` is the total amount added to every coefficient over the
/// whole series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub length: usize,
    pub d: usize,
    pub regimes: Vec<Regime>,
    #[serde(default)]
    pub gamma: f64,
    pub noise: NoiseModel,
    #[serde(default)]
    pub drift_rate: f64,
    pub seed: u64,
}

fn check_tiling(starts: impl Iterator<Item = usize>, length: usize, what: &str) -> Result<()> {
    let starts: Vec<usize> = starts.collect();
    if starts.first() != Some(&0) {
        return Err(Error::Data(format!("{what} must start at index 0")));
    }
    if starts.windows(2).any(|p| p[1] <= p[0]) || starts.last().is_some_and(|&s| s >= length) {
        return Err(Error::Data(format!("{what} starts must increase strictly and lie below the length {length}")));
    }
    Ok(())
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 || self.d == 0 {
            return Err(Error::Data("synthetic series needs length >= 2 and d >= 1".into()));
        }
        check_tiling(self.regimes.iter().map(|r| r.start), self.length, "regimes")?;
        if let Some(r) = self.regimes.iter().find(|r| r.beta.len() != self.d) {
            return Err(Error::Data(format!("regime at {} has {} coefficients, expected {}", r.start, r.beta.len(), self.d)));
        }
        let sigmas: Vec<f64> = match &self.noise {
            NoiseModel::Homoscedastic { sigma } => vec![*sigma],
            NoiseModel::Heteroscedastic { schedule } => {
                check_tiling(schedule.iter().map(|s| s.start), self.length, "noise schedule")?;
                schedule.iter().map(|s| s.sigma).collect()
            }
        };
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Data("noise levels must be finite and non-negative".into()));
        }
        if !(self.gamma.is_finite() && self.gamma.abs() < 1.0) {
            return Err(Error::Data(format!("gamma must lie in (-1, 1), got {}", self.gamma)));
        }
        if !self.drift_rate.is_finite() {
            return Err(Error::Data("drift_rate must be finite".into()));
        }
        Ok(())
    }

    /// Two regimes with a sign-flipping coefficient change at the midpoint,
    /// an autoregressive target and noise that grows in the second half.
    pub fn regime_shift(seed: u64) -> Self {
        let length = 5000;
        SyntheticSpec {
            length,
            d: 4,
            regimes: vec![
                Regime {
                    start: 0,
                    beta: vec![1.0, -0.5, 0.8, 0.3],
                },
                Regime {
                    start: length / 2,
                    beta: vec![-0.8, 0.7, -0.4, 0.9],
                },
            ],
            gamma: 0.6,
            noise: NoiseModel::Heteroscedastic {
                schedule: vec![
                    NoiseSegment { start: 0, sigma: 0.05 },
                    NoiseSegment {
                        start: length / 2,
                        sigma: 0.15,
                    },
                ],
            },
            drift_rate: 0.0,
            seed,
        }
    }

    /// One regime whose coefficients drift steadily over the series.
    pub fn drift(seed: u64) -> Self {
        SyntheticSpec {
            length: 4000,
            d: 4,
            regimes: vec![Regime {
                start: 0,
                beta: vec![0.6, -0.4, 0.5, 0.2],
            }],
            gamma: 0.5,
            noise: NoiseModel::Homoscedastic { sigma: 0.05 },
            drift_rate: 1.5,
            seed,
        }
    }

    /// Noise level switching between calm and turbulent blocks.
    pub fn heteroscedastic(seed: u64) -> Self {
        let length = 4000;
        let schedule = (0..8)
            .map(|i| NoiseSegment {
                start: i * length / 8,
                sigma: if i % 2 == 0 { 0.03 } else { 0.2 },
            })
            .collect();
        SyntheticSpec {
            length,
            d: 4,
            regimes: vec![Regime {
                start: 0,
                beta: vec![0.9, -0.6, 0.4, 0.7],
            }],
            gamma: 0.5,
            noise: NoiseModel::Heteroscedastic { schedule },
            drift_rate: 0.0,
            seed,
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<TimeSeriesDataset> {
    spec.validate()?;
    let (t_len, d) = (spec.length, spec.d);
    let mut x_rng = Rng::new(spec.seed).fork(1);
    let mut noise_rng = Rng::new(spec.seed).fork(2);
    let mut x = Vec::with_capacity(t_len * d);
    let mut y = Vec::with_capacity(t_len);
    let mut prev = 0.0;
    let mut regime = 0;
    for t in 0..t_len {
        while regime + 1 < spec.regimes.len() && spec.regimes[regime + 1].start <= t {
            regime += 1;
        }
        let shift = spec.drift_rate * t as f64 / t_len as f64;
        let row: Vec<f64> = (0..d).map(|_| x_rng.next_f64()).collect();
        let signal: f64 = spec.regimes[regime].beta.iter().zip(&row).map(|(b, xi)| (b + shift) * xi).sum();
        let eps = noise_rng.normal();
        let v = signal + spec.gamma * prev + spec.noise.sigma_at(t) * eps;
        x.extend(row);
        y.push(v);
        prev = v;
    }
    let names = (0..d).map(|j| format!("x{j}")).collect();
    let mut ds = TimeSeriesDataset::new(format!("synthetic-{}", spec.seed), names, "y", Mat::from_vec(t_len, d, x)?, y)?;
    ds.regime_boundaries = spec.regimes.iter().map(|r| r.start).collect();
    Ok(ds)
}
