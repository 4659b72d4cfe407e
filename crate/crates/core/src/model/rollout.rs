// SPDX-License-Identifier: Apache-2.0

//! Teacher-forced windowed forward pass.
//!
//! For each context step `tau = t-w+1 .. t-1`:
//!
//! ```text
//! z   = [x; h_prev]              (or [x; h_prev; u_prev] with activation memory)
//! u   = sigma(Wz z + bz)
//! y^  = Wo u + bo
//! e   = y - y^                   (ground-truth y)
//! h   = rho(We e + be)           (+ Wh h_prev for accumulative memory)
//! ```
//!
//! then one predictor-only step at `t` with no memory update. `h` and `u`
//! start at zero in every window.

use super::params::VarnnParams;
use super::spec::{ResidualMode, VarnnSpec};
use super::window::WindowInstance;
use crate::error::{Error, Result};
use crate::numkit::{affine_counted, MacCounter, NoTally, Tally};

/// Cached values of one predictor evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Fusion input.
    pub z: Vec<f64>,
    /// `Wz z + bz`.
    pub pre_u: Vec<f64>,
    pub u: Vec<f64>,
    pub y_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutTrace {
    /// `w` entries; the last one is the prediction step.
    pub steps: Vec<StepRecord>,
    /// `e_tau` for the `w - 1` context steps.
    pub innovations: Vec<f64>,
    /// Memory pre-activations, one per context step.
    pub pre_h: Vec<Vec<f64>>,
    /// `h_tau`, one per context step.
    pub memory: Vec<Vec<f64>>,
    pub h_initial: Vec<f64>,
    pub u_initial: Option<Vec<f64>>,
}

impl RolloutTrace {
    /// `y^_t`.
    pub fn prediction(&self) -> f64 {
        self.steps.last().expect("non-empty trace").y_hat
    }

    /// Memory entering step `s` (`h_{s-1}`).
    pub fn memory_before(&self, s: usize) -> &[f64] {
        if s == 0 {
            &self.h_initial
        } else {
            &self.memory[s - 1]
        }
    }

    /// Smallest |pre-activation| among units whose activation has a kink.
    pub fn min_kink_distance(&self, spec: &VarnnSpec) -> f64 {
        let mut best = f64::INFINITY;
        if spec.sigma.has_kink() {
            for s in &self.steps {
                best = s.pre_u.iter().fold(best, |b, v| b.min(v.abs()));
            }
        }
        if spec.memory_activation().has_kink() && spec.residual != ResidualMode::Disabled {
            for p in &self.pre_h {
                best = p.iter().fold(best, |b, v| b.min(v.abs()));
            }
        }
        best
    }
}

/// Concatenates `[x; h_prev]` or `[x; h_prev; u_prev]`.
pub fn fuse(spec: &VarnnSpec, x: &[f64], h_prev: &[f64], u_prev: Option<&[f64]>) -> Result<Vec<f64>> {
    if x.len() != spec.d {
        return Err(Error::shape("fuse: x", spec.d, x.len()));
    }
    if h_prev.len() != spec.m {
        return Err(Error::shape("fuse: h_prev", spec.m, h_prev.len()));
    }
    let mut z = Vec::with_capacity(spec.fusion_width());
    z.extend_from_slice(x);
    z.extend_from_slice(h_prev);
    match (spec.variant.has_activation_memory(), u_prev) {
        (true, Some(u)) => {
            if u.len() != spec.k {
                return Err(Error::shape("fuse: u_prev", spec.k, u.len()));
            }
            z.extend_from_slice(u);
        }
        (false, None) => {}
        (true, None) => {
            return Err(Error::VariantMismatch(format!("{} requires the previous activation", spec.variant)))
        }
        (false, Some(_)) => {
            return Err(Error::VariantMismatch(format!(
                "{} takes no activation memory",
                spec.variant
            )))
        }
    }
    Ok(z)
}

/// `u = sigma(Wz z + bz)`, `y^ = Wo u + bo`.
pub fn predictor_step(spec: &VarnnSpec, params: &VarnnParams, z: &[f64]) -> Result<(Vec<f64>, f64)> {
    let rec = predictor_record(spec, params, z.to_vec(), &mut NoTally)?;
    Ok((rec.u, rec.y_hat))
}

fn predictor_record<T: Tally>(spec: &VarnnSpec, params: &VarnnParams, z: Vec<f64>, tally: &mut T) -> Result<StepRecord> {
    if z.len() != spec.fusion_width() {
        return Err(Error::shape("predictor_step: z", spec.fusion_width(), z.len()));
    }
    let pre_u = affine_counted(&params.wz, &z, params.bz.as_slice(), tally)?;
    let u = spec.sigma.map(&pre_u);
    let y_hat = affine_counted(&params.wo, &u, params.bo.as_slice(), tally)?[0];
    Ok(StepRecord { z, pre_u, u, y_hat })
}

/// Memory refresh from the innovation `e`.
pub fn memory_update(spec: &VarnnSpec, params: &VarnnParams, e: f64, h_prev: &[f64]) -> Result<Vec<f64>> {
    let (_, h) = memory_record(spec, params, e, h_prev, &mut NoTally)?;
    Ok(h)
}

fn memory_record<T: Tally>(
    spec: &VarnnSpec,
    params: &VarnnParams,
    e: f64,
    h_prev: &[f64],
    tally: &mut T,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if h_prev.len() != spec.m {
        return Err(Error::shape("memory_update: h_prev", spec.m, h_prev.len()));
    }
    if spec.residual == ResidualMode::Disabled {
        return Ok((vec![0.0; spec.m], vec![0.0; spec.m]));
    }
    let mut pre = affine_counted(&params.we, &[e], params.be.as_slice(), tally)?;
    if spec.variant.is_accumulative() {
        let wh = params
            .wh
            .as_ref()
            .ok_or_else(|| Error::VariantMismatch(format!("{} requires Wh", spec.variant)))?;
        let carry = affine_counted(wh, h_prev, &vec![0.0; spec.m], tally)?;
        for (p, c) in pre.iter_mut().zip(carry) {
            *p += c;
        }
    }
    let h = spec.memory_activation().map(&pre);
    Ok((pre, h))
}

pub fn rollout(spec: &VarnnSpec, params: &VarnnParams, window: &WindowInstance) -> Result<RolloutTrace> {
    rollout_with(spec, params, window, &mut NoTally)
}

/// [`rollout`] plus the number of multiplies it performed.
pub fn rollout_counted(spec: &VarnnSpec, params: &VarnnParams, window: &WindowInstance) -> Result<(RolloutTrace, usize)> {
    let mut counter = MacCounter::default();
    let trace = rollout_with(spec, params, window, &mut counter)?;
    Ok((trace, counter.0))
}

fn rollout_with<T: Tally>(
    spec: &VarnnSpec,
    params: &VarnnParams,
    window: &WindowInstance,
    tally: &mut T,
) -> Result<RolloutTrace> {
    window.validate(spec.d)?;
    let w = window.len();
    let am = spec.variant.has_activation_memory();

    let h_initial = vec![0.0; spec.m];
    let u_initial = am.then(|| vec![0.0; spec.k]);

    let mut steps = Vec::with_capacity(w);
    let mut innovations = Vec::with_capacity(w - 1);
    let mut pre_h = Vec::with_capacity(w - 1);
    let mut memory: Vec<Vec<f64>> = Vec::with_capacity(w - 1);

    for (s, x) in window.xs.iter().enumerate() {
        let h_prev = memory.last().unwrap_or(&h_initial);
        let u_prev = if am {
            Some(steps.last().map_or(u_initial.as_deref().unwrap(), |r: &StepRecord| r.u.as_slice()))
        } else {
            None
        };
        let z = fuse(spec, x, h_prev, u_prev)?;
        let rec = predictor_record(spec, params, z, tally)?;
        if s + 1 < w {
            let e = window.ys_context[s] - rec.y_hat;
            let (pre, h) = memory_record(spec, params, e, h_prev, tally)?;
            innovations.push(e);
            pre_h.push(pre);
            memory.push(h);
        }
        steps.push(rec);
    }

    Ok(RolloutTrace {
        steps,
        innovations,
        pre_h,
        memory,
        h_initial,
        u_initial,
    })
}
