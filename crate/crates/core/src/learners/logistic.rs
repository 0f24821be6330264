//! L2-regularized logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 strength on the coefficients (the intercept is not penalized).
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 1000,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    coefficients: Vec<f64>,
    intercept: f64,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Weighted mean log-loss plus `l2/2 * |beta|^2`, and its gradient.
///
/// `params` holds the coefficients followed by the intercept.
pub fn loss_and_gradient(
    params: &[f64],
    x: &Matrix,
    y: &[u8],
    w: &[f64],
    l2: f64,
) -> (f64, Vec<f64>) {
    let d = x.ncols();
    debug_assert_eq!(params.len(), d + 1);
    let (beta, b) = params.split_at(d);
    let b = b[0];
    let total: f64 = w.iter().sum();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (r, row) in x.iter_rows().enumerate() {
        if w[r] == 0.0 {
            continue;
        }
        let z = b + row.iter().zip(beta).map(|(a, c)| a * c).sum::<f64>();
        let t = f64::from(y[r]);
        loss += w[r] * (softplus(z) - t * z);
        let g = w[r] * (sigmoid(z) - t);
        for (gj, xj) in grad[..d].iter_mut().zip(row) {
            *gj += g * xj;
        }
        grad[d] += g;
    }
    loss /= total;
    for g in &mut grad {
        *g /= total;
    }
    loss += 0.5 * l2 * beta.iter().map(|c| c * c).sum::<f64>();
    for (g, c) in grad[..d].iter_mut().zip(beta) {
        *g += l2 * c;
    }
    (loss, grad)
}

impl LogisticModel {
    pub fn from_parameters(coefficients: Vec<f64>, intercept: f64) -> Self {
        Self {
            coefficients,
            intercept,
        }
    }

    /// Gradient descent from zero-initialized parameters.
    pub fn fit(x: &Matrix, y: &[u8], w: &[f64], params: &LogisticParams) -> Result<Self> {
        let d = x.ncols();
        let mut theta = vec![0.0; d + 1];
        for _ in 0..params.epochs {
            let (_, grad) = loss_and_gradient(&theta, x, y, w, params.l2);
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= params.learning_rate * g;
            }
        }
        let intercept = theta.pop().expect("d + 1 parameters");
        Ok(Self {
            coefficients: theta,
            intercept,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn decision_function(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(a, c)| a * c)
                .sum::<f64>()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows()
            .map(|r| sigmoid(self.decision_function(r)))
            .collect()
    }
}
