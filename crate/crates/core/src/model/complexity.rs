// SPDX-License-Identifier: Apache-2.0

use super::spec::{ResidualMode, VarnnSpec};

/// Stored scalars: `k*fusion + k (bz) + k (Wo) + 1 (bo) + m (We) + m (be)`,
/// plus `m^2` for `Wh` in accumulative variants.
pub fn count_parameters(spec: &VarnnSpec) -> usize {
    let (k, m) = (spec.k, spec.m);
    let mut n = k * spec.fusion_width() + k + k + 1 + m + m;
    if spec.variant.is_accumulative() {
        n += m * m;
    }
    n
}

/// Parameters of the covariate-only predictor with the same `d` and `k`.
pub fn feedforward_parameter_count(d: usize, k: usize) -> usize {
    k * d + k + k + 1
}

/// Multiplies for one window of length `w`:
/// `(w-1) * (k*fusion + k + mem) + (k*fusion + k)`, where `mem` is `m`
/// for instantaneous memory and `m + m^2` for accumulative memory.
pub fn count_macs_per_window(spec: &VarnnSpec, w: usize) -> usize {
    assert!(w >= 2, "window length must be >= 2");
    let (k, m) = (spec.k, spec.m);
    let predictor = k * spec.fusion_width() + k;
    let memory = match spec.residual {
        ResidualMode::Disabled => 0,
        _ if spec.variant.is_accumulative() => m + m * m,
        _ => m,
    };
    (w - 1) * (predictor + memory) + predictor
}
