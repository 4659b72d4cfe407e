// SPDX-License-Identifier: Apache-2.0

//! Dense numerical kernel shared by every model in the crate.
//!
//! Matrices are row-major `f64`. Vectors are plain `Vec<f64>` / `&[f64]`.
//! Affine maps always accumulate along columns in index order and add the
//! bias last, so every forward pass is bit-reproducible.

mod activation;
mod mat;
mod rng;

pub use activation::Activation;
pub use mat::{affine, affine_counted, matvec, matvec_transposed, Mat};
pub use rng::Rng;

/// Receives multiply counts from instrumented kernels.
pub trait Tally {
    fn add(&mut self, macs: usize);
}

/// Discards counts.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoTally;

impl Tally for NoTally {
    #[inline(always)]
    fn add(&mut self, _macs: usize) {}
}

/// Counts multiplies.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MacCounter(pub usize);

impl Tally for MacCounter {
    #[inline]
    fn add(&mut self, macs: usize) {
        self.0 += macs;
    }
}

/// Glorot-uniform weights: entries uniform in `[-L, L]` with
/// `L = sqrt(6 / (rows + cols))`.
pub fn glorot_init(rng: &mut Rng, rows: usize, cols: usize) -> Mat {
    assert!(rows >= 1 && cols >= 1, "glorot_init needs rows, cols >= 1");
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform(-limit, limit)).collect();
    Mat::from_vec(rows, cols, data).expect("uniform draws are finite")
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glorot_row_vector_bounded_by_one() {
        let mut rng = Rng::new(3);
        let m = glorot_init(&mut rng, 1, 5);
        assert!(m.as_slice().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn glorot_is_seeded() {
        let a = glorot_init(&mut Rng::new(11), 4, 7);
        let b = glorot_init(&mut Rng::new(11), 4, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn glorot_large_sample_mean_near_zero() {
        let m = glorot_init(&mut Rng::new(2025), 1000, 1000);
        let limit = (6.0f64 / 2000.0).sqrt();
        let mean = m.as_slice().iter().sum::<f64>() / 1e6;
        assert!(mean.abs() < 0.01, "mean = {mean}");
        assert!(m.as_slice().iter().all(|v| v.abs() <= limit));
    }
}
