// SPDX-License-Identifier: Apache-2.0

//! Reference implementations used as oracles by the integration tests.
//! Nothing here calls the crate's forward pass or solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use varnn_core::model::{ResidualMode, Variant, VarnnParams, VarnnSpec, WindowInstance};
use varnn_core::{Activation, Mat, Rng};

fn act(a: Activation, v: f64) -> f64 {
    match a {
        Activation::Relu => {
            if v > 0.0 {
                v
            } else {
                0.0
            }
        }
        Activation::Tanh => v.tanh(),
        Activation::Identity => v,
    }
}

fn at(m: &Mat, r: usize, c: usize) -> f64 {
    m.as_slice()[r * m.cols() + c]
}

/// Result of the scalar reference rollout.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub prediction: f64,
    pub context_predictions: Vec<f64>,
    pub innovations: Vec<f64>,
    pub memories: Vec<Vec<f64>>,
    /// Multiplies performed, counted one at a time.
    pub multiplies: usize,
    /// Smallest |pre-activation| entering a ReLU (infinite if none).
    pub kink_distance: f64,
}

/// Step-by-step scalar recomputation of the windowed forward pass.
pub fn oracle_rollout(spec: &VarnnSpec, p: &VarnnParams, win: &WindowInstance) -> OracleRun {
    let (d, m, k) = (spec.d, spec.m, spec.k);
    let w = win.xs.len();
    let am = matches!(spec.variant, Variant::RmAm | Variant::ArmAm);
    let arm = matches!(spec.variant, Variant::Arm | Variant::ArmAm);
    let rho = if spec.residual == ResidualMode::Scalar { Activation::Identity } else { spec.rho };

    let mut h = vec![0.0; m];
    let mut u = vec![0.0; k];
    let mut run = OracleRun {
        prediction: 0.0,
        context_predictions: Vec::new(),
        innovations: Vec::new(),
        memories: Vec::new(),
        multiplies: 0,
        kink_distance: f64::INFINITY,
    };
    let near = |a: Activation, s: f64, run: &mut OracleRun| {
        if a == Activation::Relu {
            run.kink_distance = run.kink_distance.min(s.abs());
        }
    };
    for tau in 0..w {
        let mut z: Vec<f64> = win.xs[tau].clone();
        assert_eq!(z.len(), d);
        z.extend(&h);
        if am {
            z.extend(&u);
        }
        let mut next_u = vec![0.0; k];
        for i in 0..k {
            let mut s = at(&p.bz, i, 0);
            for (j, zj) in z.iter().enumerate() {
                s += at(&p.wz, i, j) * zj;
                run.multiplies += 1;
            }
            near(spec.sigma, s, &mut run);
            next_u[i] = act(spec.sigma, s);
        }
        u = next_u;
        let mut y_hat = at(&p.bo, 0, 0);
        for (i, ui) in u.iter().enumerate() {
            y_hat += at(&p.wo, 0, i) * ui;
            run.multiplies += 1;
        }
        if tau == w - 1 {
            run.prediction = y_hat;
            break;
        }
        run.context_predictions.push(y_hat);
        let e = win.ys_context[tau] - y_hat;
        run.innovations.push(e);
        if spec.residual == ResidualMode::Disabled {
            h = vec![0.0; m];
        } else {
            let mut next_h = vec![0.0; m];
            for i in 0..m {
                let mut s = at(&p.be, i, 0) + at(&p.we, i, 0) * e;
                run.multiplies += 1;
                if arm {
                    let wh = p.wh.as_ref().expect("accumulative variant has Wh");
                    for (j, hj) in h.iter().enumerate() {
                        s += at(wh, i, j) * hj;
                        run.multiplies += 1;
                    }
                }
                near(rho, s, &mut run);
                next_h[i] = act(rho, s);
            }
            h = next_h;
        }
        run.memories.push(h.clone());
    }
    run
}

pub const VARIANTS: [Variant; 4] = [Variant::Rm, Variant::RmAm, Variant::Arm, Variant::ArmAm];

pub fn random_spec(rng: &mut Rng, max_width: usize) -> VarnnSpec {
    let acts = [Activation::Relu, Activation::Tanh];
    let modes = [ResidualMode::Projected, ResidualMode::Scalar, ResidualMode::Disabled];
    let dim = |rng: &mut Rng| 1 + rng.below(max_width);
    let (d, m, k) = (dim(rng), dim(rng), dim(rng));
    let variant = VARIANTS[rng.below(4)];
    let sigma = acts[rng.below(2)];
    let rho = acts[rng.below(2)];
    let mode = modes[rng.below(3)];
    VarnnSpec::new(variant, d, m, k).with_activations(sigma, rho).with_residual(mode)
}

/// Glorot weights plus nonzero biases and persistence, so every path is
/// exercised.
pub fn random_params(rng: &mut Rng, spec: &VarnnSpec) -> VarnnParams {
    let mut p = VarnnParams::init(spec, rng);
    for b in [&mut p.bz, &mut p.bo, &mut p.be] {
        b.as_mut_slice().iter_mut().for_each(|v| *v = rng.uniform(-0.5, 0.5));
    }
    if let Some(wh) = &mut p.wh {
        wh.as_mut_slice().iter_mut().for_each(|v| *v = rng.uniform(-0.6, 0.6));
    }
    p.pin_frozen(spec);
    p
}

pub fn random_window(rng: &mut Rng, d: usize, w: usize) -> WindowInstance {
    WindowInstance::new(
        (0..w).map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect(),
        (0..w - 1).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        rng.uniform(-1.0, 1.0),
    )
}

/// Least squares with intercept through a Householder QR of `[1 | X]`.
/// Returns `(weights, intercept)`.
pub fn qr_least_squares(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let p = x[0].len();
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let b = DVector::from_column_slice(y);
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let qtb = q.transpose() * b;
    let beta = r.solve_upper_triangular(&qtb).expect("full column rank");
    (beta.iter().skip(1).copied().collect(), beta[0])
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}
