// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WindowInstance;
use crate::numkit::{glorot_init, matvec, Activation, Mat, Rng};
use crate::tensors::Parameters;
use crate::trainer::{dense_backward, WindowModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnSpec {
    pub d: usize,
    pub hidden: usize,
    pub activation: Activation,
}

impl RnnSpec {
    pub fn parameter_count(&self) -> usize {
        let (d, k) = (self.d, self.hidden);
        k * d + k * k + k + k + 1
    }

    /// `(w-1) (k d + k^2) + k`.
    pub fn macs_per_window(&self, w: usize) -> usize {
        let (d, k) = (self.d, self.hidden);
        (w - 1) * (k * d + k * k) + k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub wx: Mat,
    pub wh: Mat,
    pub bh: Mat,
    pub wo: Mat,
    pub bo: Mat,
}

impl Parameters for RnnParams {
    fn tensors(&self) -> Vec<(&'static str, &Mat)> {
        vec![
            ("Wx", &self.wx),
            ("Wh", &self.wh),
            ("bh", &self.bh),
            ("Wo", &self.wo),
            ("bo", &self.bo),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        vec![
            ("Wx", &mut self.wx),
            ("Wh", &mut self.wh),
            ("bh", &mut self.bh),
            ("Wo", &mut self.wo),
            ("bo", &mut self.bo),
        ]
    }
}

/// Elman recurrence over the `w - 1` context covariates; linear head on
/// the last hidden state. Targets in the window are not used.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleRnn {
    pub spec: RnnSpec,
    pub params: RnnParams,
}

struct RnnTrace {
    pre: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    y_hat: f64,
}

impl SimpleRnn {
    pub fn new(spec: RnnSpec, rng: &mut Rng) -> Result<Self> {
        if spec.d == 0 || spec.hidden == 0 {
            return Err(Error::InvalidSpec("RNN widths must be >= 1".into()));
        }
        let k = spec.hidden;
        let params = RnnParams {
            wx: glorot_init(rng, k, spec.d),
            wh: glorot_init(rng, k, k),
            bh: Mat::zeros(k, 1),
            wo: glorot_init(rng, 1, k),
            bo: Mat::zeros(1, 1),
        };
        Ok(SimpleRnn { spec, params })
    }

    pub fn zeros(spec: RnnSpec) -> Self {
        let k = spec.hidden;
        let params = RnnParams {
            wx: Mat::zeros(k, spec.d),
            wh: Mat::zeros(k, k),
            bh: Mat::zeros(k, 1),
            wo: Mat::zeros(1, k),
            bo: Mat::zeros(1, 1),
        };
        SimpleRnn { spec, params }
    }

    fn run(&self, window: &WindowInstance) -> Result<RnnTrace> {
        window.validate(self.spec.d)?;
        let k = self.spec.hidden;
        let steps = window.len() - 1;
        let mut pre_all = Vec::with_capacity(steps);
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let zero = vec![0.0; k];
        for x in &window.xs[..steps] {
            let h_prev = hidden.last().unwrap_or(&zero);
            let from_x = matvec(&self.params.wx, x)?;
            let from_h = matvec(&self.params.wh, h_prev)?;
            let pre: Vec<f64> = (0..k).map(|i| (from_x[i] + from_h[i]) + self.params.bh.as_slice()[i]).collect();
            hidden.push(self.spec.activation.map(&pre));
            pre_all.push(pre);
        }
        let last = hidden.last().expect("at least one step");
        let y_hat = crate::numkit::affine(&self.params.wo, last, self.params.bo.as_slice())?[0];
        Ok(RnnTrace {
            pre: pre_all,
            hidden,
            y_hat,
        })
    }
}

/// `h_0 = 0`, `h = act(Wx x + Wh h_prev + bh)` over the context steps,
/// `y^_t = Wo h + bo`.
pub fn rnn_rollout(spec: &RnnSpec, params: &RnnParams, window: &WindowInstance) -> Result<f64> {
    let model = SimpleRnn {
        spec: spec.clone(),
        params: params.clone(),
    };
    Ok(model.run(window)?.y_hat)
}

impl WindowModel for SimpleRnn {
    type Params = RnnParams;

    fn params(&self) -> &RnnParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut RnnParams {
        &mut self.params
    }

    fn predict(&self, window: &WindowInstance) -> Result<f64> {
        Ok(self.run(window)?.y_hat)
    }

    fn accumulate_gradient(&self, window: &WindowInstance, grads: &mut RnnParams) -> Result<f64> {
        let tr = self.run(window)?;
        let err = tr.y_hat - window.y_target;
        let last = tr.hidden.len() - 1;
        let mut dh = dense_backward(
            &self.params.wo,
            &tr.hidden[last],
            &[2.0 * err],
            &mut grads.wo,
            Some(&mut grads.bo),
        )?;
        let zero = vec![0.0; self.spec.hidden];
        for s in (0..=last).rev() {
            let da: Vec<f64> = dh
                .iter()
                .zip(&tr.pre[s])
                .map(|(g, &a)| g * self.spec.activation.derivative(a))
                .collect();
            dense_backward(&self.params.wx, &window.xs[s], &da, &mut grads.wx, Some(&mut grads.bh))?;
            let h_prev = if s == 0 { &zero } else { &tr.hidden[s - 1] };
            dh = dense_backward(&self.params.wh, h_prev, &da, &mut grads.wh, None)?;
        }
        Ok(err * err)
    }

    fn macs_per_window(&self, w: usize) -> usize {
        self.spec.macs_per_window(w)
    }

    fn label(&self) -> String {
        "SimpleRNN".into()
    }
}
