// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::{loss, WindowModel};
use crate::error::Result;
use crate::model::{rollout, ResidualMode, Variant, Varnn, VarnnParams, VarnnSpec, WindowInstance};
use crate::numkit::{Activation, Rng};
use crate::tensors::Parameters;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max |g_a - g_fd| / max(1, |g_a|, |g_fd|)` over all trainable scalars.
    pub max_rel_error: f64,
    pub worst_tensor: &'static str,
    pub worst_index: usize,
    pub checked: usize,
}

/// Central finite differences against [`backward`](super::backward) for
/// a single window.
pub fn grad_check(spec: &VarnnSpec, params: &VarnnParams, window: &WindowInstance, step: f64) -> Result<f64> {
    let model = Varnn::from_parts(spec.clone(), params.clone())?;
    Ok(grad_check_model(&model, window, step)?.max_rel_error)
}

pub fn grad_check_model<M: WindowModel>(model: &M, window: &WindowInstance, step: f64) -> Result<GradCheckReport> {
    grad_check_with(model, window, step, |_| {})
}

/// Like [`grad_check_model`], but `tamper` may modify the analytic gradient
/// before comparison (fault injection).
pub fn grad_check_with<M: WindowModel>(
    model: &M,
    window: &WindowInstance,
    step: f64,
    tamper: impl FnOnce(&mut M::Params),
) -> Result<GradCheckReport> {
    let mut analytic = model.params().zeros_like();
    model.accumulate_gradient(window, &mut analytic)?;
    tamper(&mut analytic);

    let frozen = model.frozen();
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_tensor: "",
        worst_index: 0,
        checked: 0,
    };
    let names: Vec<&'static str> = analytic.tensors().iter().map(|(n, _)| *n).collect();
    for (ti, name) in names.into_iter().enumerate() {
        if frozen.contains(&name) {
            continue;
        }
        let n = analytic.tensors()[ti].1.len();
        for i in 0..n {
            let original = probe.params().tensors()[ti].1.as_slice()[i];
            set_entry(&mut probe, ti, i, original + step);
            let plus = loss(probe.predict(window)?, window.y_target);
            set_entry(&mut probe, ti, i, original - step);
            let minus = loss(probe.predict(window)?, window.y_target);
            set_entry(&mut probe, ti, i, original);

            let fd = (plus - minus) / (2.0 * step);
            let an = analytic.tensors()[ti].1.as_slice()[i];
            let rel = (an - fd).abs() / 1f64.max(an.abs()).max(fd.abs());
            report.checked += 1;
            if report.checked == 1 || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_tensor = name;
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}

fn set_entry<M: WindowModel>(model: &mut M, tensor: usize, index: usize, value: f64) {
    let mut tensors = model.params_mut().tensors_mut();
    tensors[tensor].1.as_mut_slice()[index] = value;
}

/// Tolerance on the relative error for smooth (tanh/tanh) models.
pub const SMOOTH_TOLERANCE: f64 = 1e-5;
/// Tolerance for ReLU models sampled away from their kinks.
pub const KINKED_TOLERANCE: f64 = 1e-4;
/// Pre-activations closer than this to a ReLU kink trigger a resample.
const KINK_MARGIN: f64 = 1e-3;

/// One randomly drawn model checked by [`gradcheck_suite`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCase {
    pub label: String,
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub w: usize,
    pub max_rel_error: f64,
    pub worst_tensor: &'static str,
    pub tolerance: f64,
}

impl SuiteCase {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

/// Checks `cases` random models whose predictor and memory both use
/// `activation`, with `d, m, k` drawn from `{1, 2, 4}`, `w` from
/// `{2, 3, 5}`, and variant and residual mode drawn uniformly. ReLU draws
/// are redrawn until every pre-activation is at least `1e-3` from zero.
///
/// With `flip_sign` the analytic gradient is negated before comparison,
/// which must make the check fail.
pub fn gradcheck_suite(activation: Activation, cases: usize, seed: u64, step: f64, flip_sign: bool) -> Result<Vec<SuiteCase>> {
    const SIZES: [usize; 3] = [1, 2, 4];
    const WINDOWS: [usize; 3] = [2, 3, 5];
    const MODES: [ResidualMode; 3] = [ResidualMode::Projected, ResidualMode::Scalar, ResidualMode::Disabled];
    let tolerance = if activation.has_kink() { KINKED_TOLERANCE } else { SMOOTH_TOLERANCE };
    let mut rng = Rng::new(seed);
    let mut out = Vec::with_capacity(cases);
    for _ in 0..cases {
        let pick = |rng: &mut Rng, n: usize| rng.below(n);
        let variant = Variant::ALL[pick(&mut rng, 4)];
        let (d, m, k) = (SIZES[pick(&mut rng, 3)], SIZES[pick(&mut rng, 3)], SIZES[pick(&mut rng, 3)]);
        let w = WINDOWS[pick(&mut rng, 3)];
        let spec = VarnnSpec::new(variant, d, m, k)
            .with_activations(activation, activation)
            .with_residual(MODES[pick(&mut rng, 3)]);
        let (model, window) = loop {
            let mut params = VarnnParams::init(&spec, &mut rng);
            for b in [&mut params.bz, &mut params.bo, &mut params.be] {
                b.as_mut_slice().iter_mut().for_each(|v| *v = rng.uniform(-0.5, 0.5));
            }
            params.pin_frozen(&spec);
            let window = WindowInstance::new(
                (0..w).map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect(),
                (0..w - 1).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                rng.uniform(-1.0, 1.0),
            );
            let trace = rollout(&spec, &params, &window)?;
            if trace.min_kink_distance(&spec) >= KINK_MARGIN {
                break (Varnn::from_parts(spec.clone(), params)?, window);
            }
        };
        let report = grad_check_with(&model, &window, step, |g| {
            if flip_sign {
                g.scale(-1.0);
            }
        })?;
        out.push(SuiteCase {
            label: spec.label(),
            d,
            m: spec.m,
            k,
            w,
            max_rel_error: report.max_rel_error,
            worst_tensor: report.worst_tensor,
            tolerance,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(rng: &mut Rng, d: usize, w: usize) -> WindowInstance {
        WindowInstance::new(
            (0..w).map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect(),
            (0..w - 1).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            rng.uniform(-1.0, 1.0),
        )
    }

    #[test]
    fn tanh_all_variants() {
        let mut rng = Rng::new(31);
        for variant in Variant::ALL {
            for residual in [ResidualMode::Projected, ResidualMode::Scalar, ResidualMode::Disabled] {
                let spec = VarnnSpec::new(variant, 3, 2, 4)
                    .with_activations(Activation::Tanh, Activation::Tanh)
                    .with_residual(residual);
                let p = VarnnParams::init(&spec, &mut rng);
                let win = window(&mut rng, 3, 5);
                let err = grad_check(&spec, &p, &win, 1e-6).unwrap();
                assert!(err <= 1e-5, "{variant} {residual:?}: {err}");
            }
        }
    }

    #[test]
    fn zero_params_bias_matches_tightly() {
        let spec = VarnnSpec::new(Variant::Rm, 2, 2, 2).with_activations(Activation::Tanh, Activation::Tanh);
        let p = VarnnParams::zeros(&spec);
        let win = window(&mut Rng::new(3), 2, 4);
        let err = grad_check(&spec, &p, &win, 1e-6).unwrap();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn tampered_gradient_detected() {
        let spec = VarnnSpec::new(Variant::Rm, 2, 2, 3).with_activations(Activation::Tanh, Activation::Tanh);
        let model = Varnn::new(spec, &mut Rng::new(10)).unwrap();
        let win = window(&mut Rng::new(11), 2, 4);
        let r = grad_check_with(&model, &win, 1e-6, |g| g.scale(-1.0)).unwrap();
        assert!(r.max_rel_error > 1e-2);
    }
}
