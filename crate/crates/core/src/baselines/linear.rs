// SPDX-License-Identifier: Apache-2.0

use super::lagged::{build_design, FeatureMode};
use crate::error::{Error, Result};
use crate::model::WindowInstance;
use crate::numkit::Mat;

/// Ridge term added to the normal equations.
pub const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Set when the Gram matrix was numerically singular; the returned
    /// weights are then the ridge solution.
    pub rank_deficient: bool,
}

impl LinearFit {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, x) in self.weights.iter().zip(features) {
            acc += w * x;
        }
        acc + self.intercept
    }
}

/// Least squares with intercept: minimizes `sum (y - Xw - b)^2`.
///
/// Columns and targets are centered, the normal equations
/// `(Xc^T Xc + RIDGE I) w = Xc^T yc` are solved by Cholesky, and
/// `b = mean(y) - mean(x) . w`.
pub fn fit_linear_least_squares(design: &Mat, targets: &[f64]) -> Result<LinearFit> {
    let (n, p) = (design.rows(), design.cols());
    if n == 0 {
        return Err(Error::Data("least squares needs at least one row".into()));
    }
    if targets.len() != n {
        return Err(Error::shape("fit_linear_least_squares", format!("{n} targets"), targets.len()));
    }

    let x_mean: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| design[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let y_mean = targets.iter().sum::<f64>() / n as f64;

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut centered = vec![0.0; p];
    for i in 0..n {
        for (c, (x, m)) in centered.iter_mut().zip(design.row(i).iter().zip(&x_mean)) {
            *c = x - m;
        }
        let yc = targets[i] - y_mean;
        for a in 0..p {
            rhs[a] += centered[a] * yc;
            for b in 0..=a {
                gram[a * p + b] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..p {
        gram[a * p + a] += RIDGE;
        for b in 0..a {
            gram[b * p + a] = gram[a * p + b];
        }
    }

    let scale = (0..p).map(|a| gram[a * p + a]).fold(1.0, f64::max);
    let (chol, rank_deficient) = cholesky(&gram, p, scale);
    if rank_deficient {
        log::warn!("least squares design is rank deficient; returning the ridge solution");
    }
    let weights = cholesky_solve(&chol, p, &rhs);
    let intercept = y_mean - x_mean.iter().zip(&weights).map(|(m, w)| m * w).sum::<f64>();
    if !weights.iter().all(|w| w.is_finite()) || !intercept.is_finite() {
        return Err(Error::NonFinite("fit_linear_least_squares"));
    }
    Ok(LinearFit {
        weights,
        intercept,
        rank_deficient,
    })
}

/// Lower-triangular factor. Pivots that collapse below `1e-9 * scale` are
/// flagged and clamped to the ridge floor.
fn cholesky(a: &[f64], p: usize, scale: f64) -> (Vec<f64>, bool) {
    let mut l = vec![0.0; p * p];
    let mut deficient = false;
    let floor = RIDGE * scale.max(1.0);
    for j in 0..p {
        let mut diag = a[j * p + j];
        for k in 0..j {
            diag -= l[j * p + k] * l[j * p + k];
        }
        if diag < 1e-9 * scale {
            deficient = true;
            diag = diag.max(floor);
        }
        let ljj = diag.sqrt();
        l[j * p + j] = ljj;
        for i in j + 1..p {
            let mut v = a[i * p + j];
            for k in 0..j {
                v -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = v / ljj;
        }
    }
    (l, deficient)
}

fn cholesky_solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * p + k] * y[k];
        }
        y[i] = v / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut v = y[i];
        for k in i + 1..p {
            v -= l[k * p + i] * x[k];
        }
        x[i] = v / l[i * p + i];
    }
    x
}

/// Closed-form linear model over window features (static LR or ARX-LR).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegressor {
    pub mode: FeatureMode,
    pub fit: LinearFit,
}

impl LinearRegressor {
    pub fn train(windows: &[WindowInstance], mode: FeatureMode) -> Result<Self> {
        let design = build_design(windows, mode)?;
        let fit = fit_linear_least_squares(&design.features, &design.targets)?;
        Ok(LinearRegressor { mode, fit })
    }

    pub fn predict(&self, window: &WindowInstance) -> f64 {
        self.fit.predict(&self.mode.features(window))
    }

    pub fn parameter_count(&self) -> usize {
        self.fit.weights.len() + 1
    }

    pub fn macs_per_window(&self) -> usize {
        self.fit.weights.len()
    }

    pub fn label(&self) -> &'static str {
        match self.mode {
            FeatureMode::Current => "LR",
            FeatureMode::Lagged => "ARX-LR",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = fit_linear_least_squares(&Mat::column(&x).unwrap(), &y).unwrap();
        assert!((fit.weights[0] - 2.0).abs() < 1e-10);
        assert!(fit.intercept.abs() < 1e-10);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn constant_target() {
        let mut rng = Rng::new(1);
        let x: Vec<f64> = (0..30).map(|_| rng.next_f64()).collect();
        let fit = fit_linear_least_squares(&Mat::from_vec(15, 2, x).unwrap(), &[4.5; 15]).unwrap();
        assert!(fit.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((fit.intercept - 4.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_column_flagged() {
        let mut rng = Rng::new(2);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..20 {
            let v = rng.next_f64();
            data.extend_from_slice(&[v, v]);
            y.push(3.0 * v + 1.0);
        }
        let fit = fit_linear_least_squares(&Mat::from_vec(20, 2, data).unwrap(), &y).unwrap();
        assert!(fit.rank_deficient);
        assert!((fit.weights[0] + fit.weights[1] - 3.0).abs() < 1e-6);
        assert!((fit.intercept - 1.0).abs() < 1e-6);
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let mut rng = Rng::new(3);
        let (n, p) = (80, 4);
        let data: Vec<f64> = (0..n * p).map(|_| rng.next_f64()).collect();
        let x = Mat::from_vec(n, p, data).unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let fit = fit_linear_least_squares(&x, &y).unwrap();
        let r: Vec<f64> = (0..n).map(|i| y[i] - fit.predict(x.row(i))).collect();
        for j in 0..p {
            let dot: f64 = (0..n).map(|i| x[(i, j)] * r[i]).sum();
            assert!(dot.abs() <= 1e-6, "column {j}: {dot}");
        }
        assert!(r.iter().sum::<f64>().abs() <= 1e-9);
    }
}
