//! Weighted Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Added variance, as a fraction of the largest (weighted) feature variance.
    pub var_smoothing: f64,
    /// Overrides the computed smoothing term when set.
    pub epsilon: Option<f64>,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self {
            var_smoothing: 1e-9,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
    epsilon: f64,
}

fn weighted_moments(x: &Matrix, w: &[f64], keep: impl Fn(usize) -> bool) -> (Vec<f64>, Vec<f64>, f64) {
    let d = x.ncols();
    let mut total = 0.0;
    let mut mean = vec![0.0; d];
    for r in (0..x.nrows()).filter(|&r| keep(r)) {
        total += w[r];
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += w[r] * v;
        }
    }
    for m in &mut mean {
        *m /= total;
    }
    let mut var = vec![0.0; d];
    for r in (0..x.nrows()).filter(|&r| keep(r)) {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *s += w[r] * (v - m) * (v - m);
        }
    }
    for s in &mut var {
        *s /= total;
    }
    (mean, var, total)
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[u8], w: &[f64], params: &NaiveBayesParams) -> Result<Self> {
        let epsilon = params.epsilon.unwrap_or_else(|| {
            let (_, var, _) = weighted_moments(x, w, |_| true);
            let max_var = var.iter().copied().fold(0.0, f64::max);
            params.var_smoothing * if max_var > 0.0 { max_var } else { 1.0 }
        });
        let mut log_prior = [0.0; 2];
        let mut mean: [Vec<f64>; 2] = Default::default();
        let mut var: [Vec<f64>; 2] = Default::default();
        let grand: f64 = w.iter().sum();
        for c in 0..2u8 {
            let (m, mut v, total) = weighted_moments(x, w, |r| y[r] == c);
            for s in &mut v {
                *s += epsilon;
            }
            log_prior[usize::from(c)] = (total / grand).ln();
            mean[usize::from(c)] = m;
            var[usize::from(c)] = v;
        }
        Ok(Self {
            log_prior,
            mean,
            var,
            epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn joint_log_likelihood(&self, row: &[f64], c: usize) -> f64 {
        let mut ll = self.log_prior[c];
        for ((v, m), s) in row.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            ll -= 0.5 * (2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / (2.0 * s);
        }
        ll
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows()
            .map(|r| {
                let diff = self.joint_log_likelihood(r, 0) - self.joint_log_likelihood(r, 1);
                1.0 / (1.0 + diff.exp())
            })
            .collect()
    }
}
