// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

/// One sliding window ending at time `t`.
///
/// `xs` holds the covariates at `t-w+1 ..= t`, `ys_context` the targets at
/// `t-w+1 ..= t-1`. `y_target` is `y_t`; forward passes never read it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowInstance {
    pub xs: Vec<Vec<f64>>,
    pub ys_context: Vec<f64>,
    pub y_target: f64,
    /// Index of `t` in the source series.
    pub t: usize,
}

impl WindowInstance {
    pub fn new(xs: Vec<Vec<f64>>, ys_context: Vec<f64>, y_target: f64) -> Self {
        WindowInstance {
            xs,
            ys_context,
            y_target,
            t: 0,
        }
    }

    /// Window length `w`.
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Covariates at the prediction time.
    pub fn current_x(&self) -> &[f64] {
        self.xs.last().expect("window has at least two steps")
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let w = self.xs.len();
        if w < 2 {
            return Err(Error::shape("window", "w >= 2", format!("w = {w}")));
        }
        if self.ys_context.len() != w - 1 {
            return Err(Error::shape(
                "window",
                format!("{} context targets", w - 1),
                self.ys_context.len(),
            ));
        }
        if let Some(x) = self.xs.iter().find(|x| x.len() != d) {
            return Err(Error::shape("window covariates", format!("d = {d}"), x.len()));
        }
        Ok(())
    }
}
