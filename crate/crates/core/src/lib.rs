//! Fairness benchmarking toolkit built around model-based bias mitigation:
//! an ensemble of extrapolation models predicts each protected attribute from
//! the remaining features, and at prediction time the synthesized attribute
//! replaces the real one.
//!
//! Modules:
//! * [`tabular`]: manifests, CSV ingestion, encoding, splitting, synthetic data
//! * [`learners`]: CART, logistic regression, random forest, Gaussian NB
//! * [`sampling`]: SMOTE oversampling
//! * [`xfair`]: extrapolation ensembles, mitigation pipeline, explanations
//! * [`baselines`]: Reweighing, Fair-SMOTE, situation-testing filter, random shuffle
//! * [`metrics`]: group fairness, flip rate, performance
//! * [`stats`]: Cliff's delta and Scott-Knott ranking
//! * [`harness`]: repeated seeded trials, summaries, runtime ratios, figure data

pub mod baselines;
pub mod error;
pub mod harness;
pub mod learners;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod tabular;
pub mod xfair;

pub use error::{Error, Result};
pub use matrix::Matrix;
