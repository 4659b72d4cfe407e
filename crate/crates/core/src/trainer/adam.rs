// SPDX-License-Identifier: Apache-2.0

use super::TrainConfig;
use crate::tensors::Parameters;

/// First/second moment accumulators, shape-congruent with the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<P> {
    pub first: P,
    pub second: P,
    pub step: u64,
}

impl<P: Parameters> AdamState<P> {
    pub fn new(params: &P) -> Self {
        AdamState {
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update: `θ -= lr * m^ / (sqrt(v^) + eps)`.
pub fn adam_step<P: Parameters>(state: &mut AdamState<P>, params: &mut P, grads: &P, cfg: &TrainConfig) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);

    let params = params.tensors_mut();
    let grads = grads.tensors();
    let firsts = state.first.tensors_mut();
    let seconds = state.second.tensors_mut();
    for (((p, g), m), v) in params.into_iter().zip(grads).zip(firsts).zip(seconds) {
        let p = p.1.as_mut_slice();
        let g = g.1.as_slice();
        let m = m.1.as_mut_slice();
        let v = v.1.as_mut_slice();
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps_adam);
        }
    }
}
