//! Bagged CART ensemble.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{CartParams, DecisionTree};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `t` draws from the stream `(seed, t)`, so training order does not
    /// affect the result.
    pub fn fit(x: &Matrix, y: &[u8], w: &[f64], params: &ForestParams, seed: u64) -> Result<Self> {
        let n = x.nrows();
        let d = x.ncols();
        let max_features = params
            .max_features
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1));
        let cart = CartParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            max_features: Some(max_features),
        };
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::stream_rng(seed, t as u64);
                if !params.bootstrap {
                    return DecisionTree::fit_rows(x, y, w, (0..n).collect(), &cart, &mut rng);
                }
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                let rows: Vec<usize> = (0..n).filter(|&r| counts[r] > 0).collect();
                let bw: Vec<f64> = w
                    .iter()
                    .zip(&counts)
                    .map(|(wi, &c)| wi * f64::from(c))
                    .collect();
                DecisionTree::fit_rows(x, y, &bw, rows, &cart, &mut rng)
            })
            .collect();
        Ok(Self { trees })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Mean of member-tree probabilities.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        x.iter_rows()
            .map(|r| self.trees.iter().map(|t| t.proba_row(r)).sum::<f64>() / k)
            .collect()
    }
}
