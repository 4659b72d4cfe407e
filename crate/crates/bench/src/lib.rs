// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use varnn_core::data::{generate_synthetic, prepare, PipelineConfig, PreparedData, SyntheticSpec};
use varnn_core::{Rng, Variant, Varnn, VarnnSpec};

/// Prepared regime-shift data of the given length (`d = 4`, `w = 5`).
pub fn prepared(length: usize, seed: u64) -> PreparedData {
    let mut spec = SyntheticSpec::regime_shift(seed);
    spec.length = length;
    spec.regimes[1].start = length / 2;
    if let varnn_core::data::NoiseModel::Heteroscedastic { schedule } = &mut spec.noise {
        schedule[1].start = length / 2;
    }
    let raw = generate_synthetic(&spec).expect("valid preset");
    prepare(raw, &PipelineConfig::default()).expect("long enough for every split")
}

pub fn model(variant: Variant, d: usize, m: usize, k: usize) -> Varnn {
    Varnn::new(VarnnSpec::new(variant, d, m, k), &mut Rng::new(2025)).expect("valid spec")
}
