// SPDX-License-Identifier: Apache-2.0

use super::spec::{ResidualMode, VarnnSpec};
use crate::error::{Error, Result};
use crate::numkit::{glorot_init, Mat, Rng};
use crate::tensors::Parameters;

/// Trainable tensors. Biases are stored as single-column matrices so every
/// tensor shares one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct VarnnParams {
    /// `k x fusion_width`
    pub wz: Mat,
    /// `k x 1`
    pub bz: Mat,
    /// `1 x k`
    pub wo: Mat,
    /// `1 x 1`
    pub bo: Mat,
    /// `m x 1`
    pub we: Mat,
    /// `m x 1`
    pub be: Mat,
    /// `m x m`, accumulative variants only.
    pub wh: Option<Mat>,
}

impl VarnnParams {
    pub fn zeros(spec: &VarnnSpec) -> Self {
        let (k, m) = (spec.k, spec.m);
        let mut p = VarnnParams {
            wz: Mat::zeros(k, spec.fusion_width()),
            bz: Mat::zeros(k, 1),
            wo: Mat::zeros(1, k),
            bo: Mat::zeros(1, 1),
            we: Mat::zeros(m, 1),
            be: Mat::zeros(m, 1),
            wh: spec.variant.is_accumulative().then(|| Mat::zeros(m, m)),
        };
        p.pin_frozen(spec);
        p
    }

    /// Draw order: `Wz`, `Wo`, `We`, `Wh`.
    pub fn init(spec: &VarnnSpec, rng: &mut Rng) -> Self {
        let (k, m) = (spec.k, spec.m);
        let mut p = VarnnParams {
            wz: glorot_init(rng, k, spec.fusion_width()),
            bz: Mat::zeros(k, 1),
            wo: glorot_init(rng, 1, k),
            bo: Mat::zeros(1, 1),
            we: glorot_init(rng, m, 1),
            be: Mat::zeros(m, 1),
            wh: spec.variant.is_accumulative().then(|| glorot_init(rng, m, m)),
        };
        p.pin_frozen(spec);
        p
    }

    /// Resets tensors that the spec marks as non-trainable.
    pub fn pin_frozen(&mut self, spec: &VarnnSpec) {
        if spec.residual == ResidualMode::Scalar {
            self.we.fill(1.0);
            self.be.fill(0.0);
        }
    }

    pub fn check_shapes(&self, spec: &VarnnSpec) -> Result<()> {
        let reference = VarnnParams::zeros(spec);
        let ours = self.tensors();
        let want = reference.tensors();
        if ours.len() != want.len() {
            return Err(Error::shape(
                "VarnnParams",
                format!("{} tensors for {}", want.len(), spec.variant),
                ours.len(),
            ));
        }
        for ((name, a), (_, b)) in ours.iter().zip(&want) {
            if !a.same_shape(b) {
                return Err(Error::shape(
                    "VarnnParams",
                    format!("{name} {}x{}", b.rows(), b.cols()),
                    format!("{}x{}", a.rows(), a.cols()),
                ));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn bo_value(&self) -> f64 {
        self.bo[(0, 0)]
    }
}

impl Parameters for VarnnParams {
    fn tensors(&self) -> Vec<(&'static str, &Mat)> {
        let mut v = vec![
            ("Wz", &self.wz),
            ("bz", &self.bz),
            ("Wo", &self.wo),
            ("bo", &self.bo),
            ("We", &self.we),
            ("be", &self.be),
        ];
        if let Some(wh) = &self.wh {
            v.push(("Wh", wh));
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        let mut v = vec![
            ("Wz", &mut self.wz),
            ("bz", &mut self.bz),
            ("Wo", &mut self.wo),
            ("bo", &mut self.bo),
            ("We", &mut self.we),
            ("be", &mut self.be),
        ];
        if let Some(wh) = &mut self.wh {
            v.push(("Wh", wh));
        }
        v
    }
}
