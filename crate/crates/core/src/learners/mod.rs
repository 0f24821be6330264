//! Supervised binary learners behind one fit/predict contract.
//!
//! All learners accept per-row sample weights and take their randomness from
//! an explicit seed. Probabilities of exactly 0.5 predict the favorable
//! class (1).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub mod cart;
pub mod explain;
pub mod forest;
pub mod logistic;
pub mod naive_bayes;

pub use cart::{CartParams, DecisionTree, Node};
pub use explain::{Explanation, ExplanationEntry, ExplanationKind};
pub use forest::{ForestParams, RandomForest};
pub use logistic::{LogisticModel, LogisticParams};
pub use naive_bayes::{GaussianNb, NaiveBayesParams};

/// Decision threshold on P(y = 1). Ties predict 1.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[inline]
pub fn label_from_proba(p: f64) -> u8 {
    u8::from(p >= DECISION_THRESHOLD)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    Cart,
    LogisticRegression,
    RandomForest,
    GaussianNb,
}

impl LearnerKind {
    pub fn short_name(self) -> &'static str {
        match self {
            LearnerKind::Cart => "cart",
            LearnerKind::LogisticRegression => "lr",
            LearnerKind::RandomForest => "rf",
            LearnerKind::GaussianNb => "nb",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cart" => Ok(LearnerKind::Cart),
            "lr" | "logistic" => Ok(LearnerKind::LogisticRegression),
            "rf" | "forest" => Ok(LearnerKind::RandomForest),
            "nb" | "gnb" => Ok(LearnerKind::GaussianNb),
            other => Err(Error::InvalidInput(format!("unknown learner `{other}`"))),
        }
    }
}

/// Non-negative per-row training weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeights(Vec<f64>);

impl SampleWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "sample weights must be finite and non-negative".into(),
            ));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidInput("sample weights are all zero".into()));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Hyperparameters {
    Cart(CartParams),
    LogisticRegression(LogisticParams),
    RandomForest(ForestParams),
    GaussianNb(NaiveBayesParams),
}

impl Hyperparameters {
    pub fn kind(&self) -> LearnerKind {
        match self {
            Hyperparameters::Cart(_) => LearnerKind::Cart,
            Hyperparameters::LogisticRegression(_) => LearnerKind::LogisticRegression,
            Hyperparameters::RandomForest(_) => LearnerKind::RandomForest,
            Hyperparameters::GaussianNb(_) => LearnerKind::GaussianNb,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Cart(DecisionTree),
    LogisticRegression(LogisticModel),
    RandomForest(RandomForest),
    GaussianNb(GaussianNb),
}

/// A learner configuration plus, once fitted, its immutable model.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    params: Hyperparameters,
    fitted: Option<Arc<FittedModel>>,
    n_features: usize,
}

impl Learner {
    pub fn with_params(params: Hyperparameters) -> Self {
        Self {
            params,
            fitted: None,
            n_features: 0,
        }
    }

    /// Defaults for use as a classification model (unlimited CART depth).
    pub fn classifier(kind: LearnerKind) -> Self {
        Self::with_params(match kind {
            LearnerKind::Cart => Hyperparameters::Cart(CartParams::default()),
            LearnerKind::LogisticRegression => {
                Hyperparameters::LogisticRegression(LogisticParams::default())
            }
            LearnerKind::RandomForest => Hyperparameters::RandomForest(ForestParams::default()),
            LearnerKind::GaussianNb => Hyperparameters::GaussianNb(NaiveBayesParams::default()),
        })
    }

    /// Defaults for use as an extrapolation/explanation model (CART depth 5).
    pub fn extrapolator(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::Cart => Self::with_params(Hyperparameters::Cart(CartParams::readable())),
            other => Self::classifier(other),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        self.params.kind()
    }

    pub fn params(&self) -> &Hyperparameters {
        &self.params
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }

    pub fn model(&self) -> Option<&FittedModel> {
        self.fitted.as_deref()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Fits a copy of this learner.
    pub fn fit(
        &self,
        x: &Matrix,
        y: &[u8],
        weights: Option<&SampleWeights>,
        seed: u64,
    ) -> Result<Learner> {
        let w = check_training(x, y, weights)?;
        let model = match &self.params {
            Hyperparameters::Cart(p) => {
                FittedModel::Cart(DecisionTree::fit(x, y, &w, p, &mut crate::rng::rng_from_seed(seed))?)
            }
            Hyperparameters::LogisticRegression(p) => {
                FittedModel::LogisticRegression(LogisticModel::fit(x, y, &w, p)?)
            }
            Hyperparameters::RandomForest(p) => {
                FittedModel::RandomForest(RandomForest::fit(x, y, &w, p, seed)?)
            }
            Hyperparameters::GaussianNb(p) => FittedModel::GaussianNb(GaussianNb::fit(x, y, &w, p)?),
        };
        Ok(Learner {
            params: self.params.clone(),
            fitted: Some(Arc::new(model)),
            n_features: x.ncols(),
        })
    }

    fn fitted_for(&self, x: &Matrix) -> Result<&FittedModel> {
        let model = self.fitted.as_deref().ok_or(Error::NotFitted)?;
        if x.ncols() != self.n_features {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        Ok(model)
    }

    /// P(y = 1) per row.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(match self.fitted_for(x)? {
            FittedModel::Cart(t) => t.predict_proba(x),
            FittedModel::LogisticRegression(m) => m.predict_proba(x),
            FittedModel::RandomForest(f) => f.predict_proba(x),
            FittedModel::GaussianNb(nb) => nb.predict_proba(x),
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(label_from_proba)
            .collect())
    }

    /// Coefficient ranking (logistic regression) or rule list (CART).
    pub fn explanation(&self, feature_names: &[String]) -> Result<Explanation> {
        let model = self.fitted.as_deref().ok_or(Error::NotFitted)?;
        if feature_names.len() != self.n_features {
            return Err(Error::Dimension(format!(
                "{} feature names for a {}-feature model",
                feature_names.len(),
                self.n_features
            )));
        }
        match model {
            FittedModel::Cart(t) => Ok(explain::rule_list(t, feature_names)),
            FittedModel::LogisticRegression(m) => Ok(explain::coefficient_ranking(m, feature_names)),
            FittedModel::RandomForest(_) => Err(Error::UnsupportedExplanation("random forest".into())),
            FittedModel::GaussianNb(_) => Err(Error::UnsupportedExplanation("naive Bayes".into())),
        }
    }
}

/// Validates training inputs and returns the effective weights.
fn check_training(x: &Matrix, y: &[u8], weights: Option<&SampleWeights>) -> Result<Vec<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 training rows, got {}",
            y.len()
        )));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let w = match weights {
        Some(w) if w.len() != y.len() => {
            return Err(Error::Dimension(format!(
                "{} weights for {} rows",
                w.len(),
                y.len()
            )))
        }
        Some(w) => w.as_slice().to_vec(),
        None => vec![1.0; y.len()],
    };
    let mut mass = [0.0; 2];
    for (&label, &wi) in y.iter().zip(&w) {
        mass[usize::from(label)] += wi;
    }
    if mass[0] <= 0.0 || mass[1] <= 0.0 {
        return Err(Error::SingleClass);
    }
    Ok(w)
}
