// SPDX-License-Identifier: Apache-2.0

//! Reverse-mode sweep through a recorded rollout.
//!
//! The loss is `(y^_t - y_t)^2`. Context-step predictions enter it only
//! through the memory: `e = y - y^` gives `de/dy^ = -1`, so the memory
//! gradient flows back into every earlier predictor evaluation.

use super::WindowModel;
use crate::error::{Error, Result};
use crate::model::{rollout, ResidualMode, RolloutTrace, Varnn, VarnnParams, VarnnSpec, WindowInstance};
use crate::numkit::{matvec_transposed, Activation, Mat};
use crate::tensors::Parameters;

/// Backward pass of `out = W x + b`: accumulates `dW += d_out x^T`,
/// `db += d_out`, and returns `W^T d_out`.
pub fn dense_backward(w: &Mat, input: &[f64], d_out: &[f64], dw: &mut Mat, db: Option<&mut Mat>) -> Result<Vec<f64>> {
    dw.add_outer(d_out, input);
    if let Some(db) = db {
        for (b, d) in db.as_mut_slice().iter_mut().zip(d_out) {
            *b += d;
        }
    }
    matvec_transposed(w, d_out)
}

fn through_activation(act: Activation, pre: &[f64], grad: &[f64]) -> Vec<f64> {
    pre.iter().zip(grad).map(|(&a, &g)| g * act.derivative(a)).collect()
}

/// Gradient of the final-step squared error for one window.
pub fn backward(spec: &VarnnSpec, params: &VarnnParams, window: &WindowInstance, trace: &RolloutTrace) -> Result<VarnnParams> {
    let mut grads = params.zeros_like();
    backward_into(spec, params, window, trace, &mut grads)?;
    Ok(grads)
}

fn check_trace(spec: &VarnnSpec, window: &WindowInstance, trace: &RolloutTrace) -> Result<()> {
    let w = window.len();
    if trace.steps.len() != w || trace.innovations.len() + 1 != w || trace.memory.len() + 1 != w {
        return Err(Error::Consistency(format!(
            "window has {w} steps, trace has {} steps and {} innovations",
            trace.steps.len(),
            trace.innovations.len()
        )));
    }
    for (s, (step, x)) in trace.steps.iter().zip(&window.xs).enumerate() {
        if step.z.len() != spec.fusion_width() || step.z[..spec.d] != x[..] {
            return Err(Error::Consistency(format!("covariates differ at step {s}")));
        }
    }
    for (s, (&e, &y)) in trace.innovations.iter().zip(&window.ys_context).enumerate() {
        if e != y - trace.steps[s].y_hat {
            return Err(Error::Consistency(format!("innovation differs at step {s}")));
        }
    }
    Ok(())
}

/// Accumulates into `grads`; returns the squared error.
pub(crate) fn backward_into(
    spec: &VarnnSpec,
    params: &VarnnParams,
    window: &WindowInstance,
    trace: &RolloutTrace,
    grads: &mut VarnnParams,
) -> Result<f64> {
    check_trace(spec, window, trace)?;
    let (d, m) = (spec.d, spec.m);
    let last = trace.steps.len() - 1;
    let residual = spec.residual;
    let rho = spec.memory_activation();

    let err = trace.prediction() - window.y_target;

    // Backward through one predictor evaluation. Returns dL/dz.
    let predictor_back = |s: usize, dy: f64, du_extra: Option<&[f64]>, grads: &mut VarnnParams| -> Result<Vec<f64>> {
        let step = &trace.steps[s];
        let mut du = dense_backward(&params.wo, &step.u, &[dy], &mut grads.wo, Some(&mut grads.bo))?;
        if let Some(extra) = du_extra {
            for (a, b) in du.iter_mut().zip(extra) {
                *a += b;
            }
        }
        let da = through_activation(spec.sigma, &step.pre_u, &du);
        dense_backward(&params.wz, &step.z, &da, &mut grads.wz, Some(&mut grads.bz))
    };

    let dz = predictor_back(last, 2.0 * err, None, grads)?;
    // dL/dh and dL/du for the state leaving the step being processed.
    let mut dh = dz[d..d + m].to_vec();
    let mut du_carry = spec.variant.has_activation_memory().then(|| dz[d + m..].to_vec());

    for s in (0..last).rev() {
        let mut dh_prev = vec![0.0; m];
        let mut dy = 0.0;
        if residual != ResidualMode::Disabled {
            let dp = through_activation(rho, &trace.pre_h[s], &dh);
            let e = trace.innovations[s];
            if residual == ResidualMode::Projected {
                grads.we.add_outer(&dp, &[e]);
                for (b, g) in grads.be.as_mut_slice().iter_mut().zip(&dp) {
                    *b += g;
                }
            }
            if let (Some(wh), Some(gwh)) = (&params.wh, grads.wh.as_mut()) {
                gwh.add_outer(&dp, trace.memory_before(s));
                let carry = matvec_transposed(wh, &dp)?;
                for (a, b) in dh_prev.iter_mut().zip(carry) {
                    *a += b;
                }
            }
            let de: f64 = params.we.as_slice().iter().zip(&dp).map(|(w, g)| w * g).sum();
            dy = -de;
        }
        let dz = predictor_back(s, dy, du_carry.as_deref(), grads)?;
        for (a, b) in dh_prev.iter_mut().zip(&dz[d..d + m]) {
            *a += b;
        }
        dh = dh_prev;
        if let Some(c) = du_carry.as_mut() {
            c.copy_from_slice(&dz[d + m..]);
        }
    }

    Ok(err * err)
}

impl WindowModel for Varnn {
    type Params = VarnnParams;

    fn params(&self) -> &VarnnParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut VarnnParams {
        &mut self.params
    }

    fn predict(&self, window: &WindowInstance) -> Result<f64> {
        Varnn::predict(self, window)
    }

    fn accumulate_gradient(&self, window: &WindowInstance, grads: &mut VarnnParams) -> Result<f64> {
        let trace = rollout(&self.spec, &self.params, window)?;
        backward_into(&self.spec, &self.params, window, &trace, grads)
    }

    fn frozen(&self) -> &'static [&'static str] {
        match self.spec.residual {
            ResidualMode::Scalar => &["We", "be"],
            _ => &[],
        }
    }

    fn macs_per_window(&self, w: usize) -> usize {
        crate::model::count_macs_per_window(&self.spec, w)
    }

    fn label(&self) -> String {
        self.spec.label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;
    use crate::numkit::Rng;

    #[test]
    fn zero_network_bias_gradient() {
        for rho in [Activation::Relu, Activation::Tanh] {
            let spec = VarnnSpec::new(Variant::Rm, 2, 2, 3).with_activations(Activation::Relu, rho);
            let p = VarnnParams::zeros(&spec);
            let win = WindowInstance::new(vec![vec![0.3, 0.1]; 3], vec![0.2, 0.4], 0.7);
            let tr = rollout(&spec, &p, &win).unwrap();
            let g = backward(&spec, &p, &win, &tr).unwrap();
            assert!((g.bo_value() - (-2.0 * 0.7)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_residual_pathway_blocks() {
        // We = 0, be = 0, Wh = 0 keeps h at rho(0) = 0, so the columns of Wz
        // that read h see zero input and get zero gradient.
        let spec = VarnnSpec::new(Variant::Arm, 2, 3, 4).with_activations(Activation::Tanh, Activation::Tanh);
        let mut p = VarnnParams::init(&spec, &mut Rng::new(6));
        p.we.fill(0.0);
        p.be.fill(0.0);
        p.wh.as_mut().unwrap().fill(0.0);
        let win = WindowInstance::new(vec![vec![0.3, -0.1]; 4], vec![0.2, 0.4, -0.3], 0.7);
        let tr = rollout(&spec, &p, &win).unwrap();
        assert!(tr.memory.iter().all(|h| h.iter().all(|&v| v == 0.0)));
        let g = backward(&spec, &p, &win, &tr).unwrap();
        let h_block = g.wz.col_block(spec.d, spec.m);
        assert!(h_block.as_slice().iter().all(|&v| v == 0.0));
        assert!(g.wz.col_block(0, spec.d).as_slice().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn mismatched_trace_rejected() {
        let spec = VarnnSpec::new(Variant::Rm, 1, 1, 2);
        let p = VarnnParams::init(&spec, &mut Rng::new(1));
        let a = WindowInstance::new(vec![vec![0.1]; 3], vec![0.2, 0.3], 0.0);
        let b = WindowInstance::new(vec![vec![0.5]; 3], vec![0.2, 0.3], 0.0);
        let short = WindowInstance::new(vec![vec![0.1]; 2], vec![0.2], 0.0);
        let tr = rollout(&spec, &p, &a).unwrap();
        assert!(matches!(backward(&spec, &p, &b, &tr), Err(Error::Consistency(_))));
        assert!(matches!(backward(&spec, &p, &short, &tr), Err(Error::Consistency(_))));
    }

    #[test]
    fn scalar_mode_leaves_projection_frozen() {
        let spec = VarnnSpec::new(Variant::Rm, 2, 1, 3)
            .with_residual(ResidualMode::Scalar)
            .with_activations(Activation::Tanh, Activation::Relu);
        let p = VarnnParams::init(&spec, &mut Rng::new(2));
        let win = WindowInstance::new(vec![vec![0.3, 0.1]; 4], vec![0.2, -0.4, 0.9], 0.7);
        let tr = rollout(&spec, &p, &win).unwrap();
        // identity memory: h carries e exactly, including negative values
        for (h, e) in tr.memory.iter().zip(&tr.innovations) {
            assert_eq!(h[0], *e);
        }
        let g = backward(&spec, &p, &win, &tr).unwrap();
        assert_eq!(g.we.as_slice(), &[0.0]);
        assert_eq!(g.be.as_slice(), &[0.0]);
    }
}
