//! Model-based bias mitigation by protected-attribute extrapolation.
//!
//! For each mitigated protected attribute, `budget` extrapolation models learn
//! to predict the attribute from the non-protected features, each on its own
//! SMOTE-balanced copy of the training data. At prediction time the weighted
//! vote of those models replaces the real attribute before the classifier
//! (trained on the unmodified training data) is applied, so predictions never
//! read a real protected value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Explanation, Learner, LearnerKind};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::sampling::{smote_balance, SmoteConfig};
use crate::tabular::TabularDataset;

pub const DEFAULT_BUDGET: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum VoteWeighting {
    /// In-sample balanced accuracy on the model's own balanced training set.
    #[default]
    BalancedAccuracy,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub model_kind: LearnerKind,
    pub budget: usize,
    pub k_neighbors: usize,
    pub weighting: VoteWeighting,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            model_kind: LearnerKind::Cart,
            budget: DEFAULT_BUDGET,
            k_neighbors: 5,
            weighting: VoteWeighting::BalancedAccuracy,
        }
    }
}

/// Fitted extrapolation models for one protected attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationEnsemble {
    pub models: Vec<Learner>,
    pub vote_weights: Vec<f64>,
    pub protected_name: String,
    pub nonprotected_feature_names: Vec<String>,
    /// Positions of the non-protected features in the full schema.
    feature_columns: Vec<usize>,
}

/// Columns of `ds` that hold no protected attribute.
pub fn nonprotected_columns(ds: &TabularDataset) -> Vec<usize> {
    let protected: Vec<usize> = ds.encoding.protected.iter().map(|(_, i)| *i).collect();
    (0..ds.x.ncols()).filter(|c| !protected.contains(c)).collect()
}

fn balanced_accuracy(truth: &[u8], pred: &[u8]) -> f64 {
    let mut hit = [0usize; 2];
    let mut n = [0usize; 2];
    for (&t, &p) in truth.iter().zip(pred) {
        n[usize::from(t)] += 1;
        hit[usize::from(t)] += usize::from(t == p);
    }
    let recall = |c: usize| if n[c] == 0 { 0.0 } else { hit[c] as f64 / n[c] as f64 };
    (recall(0) + recall(1)) / 2.0
}

pub fn build_ensemble(
    train: &TabularDataset,
    protected_name: &str,
    model_kind: LearnerKind,
    budget: usize,
    seed: u64,
) -> Result<ExtrapolationEnsemble> {
    build_ensemble_with(
        train,
        protected_name,
        &EnsembleConfig {
            model_kind,
            budget,
            ..EnsembleConfig::default()
        },
        seed,
    )
}

/// Model `i` uses SMOTE stream `derive_seed(seed, 2i)` and fit stream
/// `derive_seed(seed, 2i + 1)`.
pub fn build_ensemble_with(
    train: &TabularDataset,
    protected_name: &str,
    cfg: &EnsembleConfig,
    seed: u64,
) -> Result<ExtrapolationEnsemble> {
    if cfg.budget == 0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    if !matches!(cfg.model_kind, LearnerKind::Cart | LearnerKind::LogisticRegression) {
        return Err(Error::InvalidInput(format!(
            "extrapolation model must be cart or lr, got {}",
            cfg.model_kind
        )));
    }
    let target = train.protected(protected_name)?;
    let ones = target.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == target.len() {
        return Err(Error::InvalidInput(format!(
            "protected attribute `{protected_name}` is constant in the training data"
        )));
    }
    let columns = nonprotected_columns(train);
    let np = train.x.select_columns(&columns);
    let layout = train.layout().project(&columns);
    let template = Learner::extrapolator(cfg.model_kind);

    let fitted: Vec<(Learner, f64)> = (0..cfg.budget as u64)
        .into_par_iter()
        .map(|i| {
            let smote = SmoteConfig {
                k_neighbors: cfg.k_neighbors,
                seed: derive_seed(seed, 2 * i),
                layout: layout.clone(),
            };
            let (bx, by) = smote_balance(&np, &target, &smote)?;
            let model = template.fit(&bx, &by, None, derive_seed(seed, 2 * i + 1))?;
            let weight = match cfg.weighting {
                VoteWeighting::Uniform => 1.0,
                VoteWeighting::BalancedAccuracy => {
                    balanced_accuracy(&by, &model.predict(&bx)?).max(f64::MIN_POSITIVE)
                }
            };
            Ok((model, weight))
        })
        .collect::<Result<_>>()?;
    let (models, vote_weights) = fitted.into_iter().unzip();
    Ok(ExtrapolationEnsemble {
        models,
        vote_weights,
        protected_name: protected_name.to_string(),
        nonprotected_feature_names: columns
            .iter()
            .map(|&c| train.feature_names()[c].clone())
            .collect(),
        feature_columns: columns,
    })
}

/// Weighted vote; exact 0.5 ties go to 0 (unprivileged).
pub fn weighted_vote(weights: &[f64], votes: &[u8]) -> u8 {
    let total: f64 = weights.iter().sum();
    let score: f64 = weights
        .iter()
        .zip(votes)
        .map(|(w, &v)| w * f64::from(v))
        .sum::<f64>()
        / total;
    u8::from(score > 0.5)
}

impl ExtrapolationEnsemble {
    pub fn budget(&self) -> usize {
        self.models.len()
    }

    pub fn feature_columns(&self) -> &[usize] {
        &self.feature_columns
    }

    /// Synthesized protected values for rows of non-protected features.
    pub fn synthesize_protected(&self, np_test: &Matrix) -> Result<Vec<u8>> {
        if np_test.ncols() != self.nonprotected_feature_names.len() {
            return Err(Error::Dimension(format!(
                "ensemble expects {} non-protected features, got {}",
                self.nonprotected_feature_names.len(),
                np_test.ncols()
            )));
        }
        let votes: Vec<Vec<u8>> = self
            .models
            .iter()
            .map(|m| m.predict(np_test))
            .collect::<Result<_>>()?;
        Ok((0..np_test.nrows())
            .map(|r| {
                let row_votes: Vec<u8> = votes.iter().map(|v| v[r]).collect();
                weighted_vote(&self.vote_weights, &row_votes)
            })
            .collect())
    }

    /// Synthesized protected values for a dataset with the full schema.
    pub fn synthesize_for(&self, ds: &TabularDataset) -> Result<Vec<u8>> {
        if ds.x.ncols() <= self.feature_columns.iter().copied().max().unwrap_or(0) {
            return Err(Error::Dimension("dataset schema does not match ensemble".into()));
        }
        self.synthesize_protected(&ds.x.select_columns(&self.feature_columns))
    }

    /// Explanation from the highest-weighted member (first on ties).
    pub fn explain_bias(&self) -> Result<Explanation> {
        let best = self
            .vote_weights
            .iter()
            .enumerate()
            .fold(0, |b, (i, w)| if *w > self.vote_weights[b] { i } else { b });
        let mut e = self.models[best].explanation(&self.nonprotected_feature_names)?;
        e.target = Some(self.protected_name.clone());
        Ok(e)
    }
}

pub fn synthesize_protected(ens: &ExtrapolationEnsemble, np_test: &Matrix) -> Result<Vec<u8>> {
    ens.synthesize_protected(np_test)
}

pub fn explain_bias(ens: &ExtrapolationEnsemble) -> Result<Explanation> {
    ens.explain_bias()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XFairConfig {
    pub classifier: LearnerKind,
    pub ensemble: EnsembleConfig,
}

impl Default for XFairConfig {
    fn default() -> Self {
        Self {
            classifier: LearnerKind::RandomForest,
            ensemble: EnsembleConfig::default(),
        }
    }
}

/// Classifier plus one extrapolation ensemble per mitigated attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct XFairPipeline {
    pub ensembles: Vec<ExtrapolationEnsemble>,
    pub classifier: Learner,
    pub feature_names: Vec<String>,
}

impl XFairPipeline {
    /// Fits the classifier on the unmodified training data and one ensemble
    /// per attribute in `protected`.
    pub fn build(
        train: &TabularDataset,
        protected: &[String],
        cfg: &XFairConfig,
        seed: u64,
    ) -> Result<Self> {
        if protected.is_empty() {
            return Err(Error::InvalidInput("no protected attribute to mitigate".into()));
        }
        let classifier = Learner::classifier(cfg.classifier).fit(
            &train.x,
            &train.y,
            None,
            derive_seed(seed, 0),
        )?;
        Self::with_classifier(train, protected, classifier, &cfg.ensemble, seed)
    }

    /// Wraps an already fitted classifier.
    pub fn with_classifier(
        train: &TabularDataset,
        protected: &[String],
        classifier: Learner,
        ensemble: &EnsembleConfig,
        seed: u64,
    ) -> Result<Self> {
        if classifier.n_features() != train.x.ncols() {
            return Err(Error::Dimension(
                "classifier schema differs from training data".into(),
            ));
        }
        let ensembles = protected
            .iter()
            .enumerate()
            .map(|(k, name)| {
                build_ensemble_with(train, name, ensemble, derive_seed(seed, 1 + k as u64))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            ensembles,
            classifier,
            feature_names: train.feature_names().to_vec(),
        })
    }

    pub fn ensemble(&self, protected_name: &str) -> Result<&ExtrapolationEnsemble> {
        self.ensembles
            .iter()
            .find(|e| e.protected_name == protected_name)
            .ok_or_else(|| Error::UnknownProtected(protected_name.to_string()))
    }

    fn check_schema(&self, test: &TabularDataset) -> Result<()> {
        if test.feature_names() != self.feature_names.as_slice() {
            return Err(Error::Dimension(
                "test schema differs from the pipeline's training schema".into(),
            ));
        }
        Ok(())
    }

    /// Test data with every mitigated protected column replaced by its
    /// synthesized values.
    pub fn mitigate(&self, test: &TabularDataset) -> Result<TabularDataset> {
        self.check_schema(test)?;
        let mut out = test.clone();
        for ens in &self.ensembles {
            let synth = ens.synthesize_for(test)?;
            out = out.with_protected(&ens.protected_name, &synth)?;
        }
        Ok(out)
    }

    pub fn predict(&self, test: &TabularDataset) -> Result<Vec<u8>> {
        self.classifier.predict(&self.mitigate(test)?.x)
    }
}

pub fn predict_with_xfair(p: &XFairPipeline, test: &TabularDataset) -> Result<Vec<u8>> {
    p.predict(test)
}

/// Unprivileged-over-privileged count ratios among rows with a given
/// predicted label; `None` when undefined (no privileged rows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelabelRatioReport {
    pub all_fav_ratio: Option<f64>,
    pub flipped_fav_ratio: Option<f64>,
    pub all_unfav_ratio: Option<f64>,
    pub flipped_unfav_ratio: Option<f64>,
}

fn group_ratio(pa: &[u8], pred: &[u8], rows: &[usize], label: u8) -> Option<f64> {
    let (mut unpriv, mut privileged) = (0usize, 0usize);
    for &r in rows.iter().filter(|&&r| pred[r] == label) {
        if pa[r] == 1 {
            privileged += 1;
        } else {
            unpriv += 1;
        }
    }
    (privileged > 0).then(|| unpriv as f64 / privileged as f64)
}

/// Ratios over all test rows and over rows whose synthesized attribute
/// differs from the real one. Groups use the real attribute.
pub fn relabel_ratio_report(
    p: &XFairPipeline,
    test: &TabularDataset,
    protected_name: &str,
) -> Result<RelabelRatioReport> {
    let real = test.protected(protected_name)?;
    let privileged = real.iter().filter(|&&v| v == 1).count();
    if privileged == 0 || privileged == real.len() {
        return Err(Error::InvalidInput(format!(
            "relabel ratios need both groups of `{protected_name}` in the test data"
        )));
    }
    let synth = p.ensemble(protected_name)?.synthesize_for(test)?;
    let pred = p.predict(test)?;
    let all: Vec<usize> = (0..real.len()).collect();
    let flipped: Vec<usize> = all.iter().copied().filter(|&r| synth[r] != real[r]).collect();
    Ok(RelabelRatioReport {
        all_fav_ratio: group_ratio(&real, &pred, &all, 1),
        flipped_fav_ratio: group_ratio(&real, &pred, &flipped, 1),
        all_unfav_ratio: group_ratio(&real, &pred, &all, 0),
        flipped_unfav_ratio: group_ratio(&real, &pred, &flipped, 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::flip_rate;
    use crate::tabular::{split, synth_dataset, SynthSpec, SYNTH_PROTECTED};

    fn data(rows: usize, bias: f64, seed: u64) -> TabularDataset {
        synth_dataset(&SynthSpec {
            rows,
            bias_strength: bias,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn weighted_vote_examples() {
        assert_eq!(weighted_vote(&[0.9, 0.6], &[1, 0]), 1);
        assert_eq!(weighted_vote(&[0.5, 0.5], &[1, 0]), 0);
        assert_eq!(weighted_vote(&[0.3, 0.2, 0.9], &[1, 1, 1]), 1);
        assert_eq!(weighted_vote(&[0.3, 0.2, 0.9], &[0, 0, 0]), 0);
    }

    #[test]
    fn budget_one_matches_single_model() {
        let ds = data(400, 0.4, 1);
        let ens = build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::Cart, 1, 7).unwrap();
        let np = ds.x.select_columns(ens.feature_columns());
        assert_eq!(
            ens.synthesize_protected(&np).unwrap(),
            ens.models[0].predict(&np).unwrap()
        );
    }

    #[test]
    fn vote_weights_are_deterministic() {
        let ds = data(300, 0.4, 2);
        let a = build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::Cart, 5, 3).unwrap();
        let b = build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::Cart, 5, 3).unwrap();
        assert_eq!(a.vote_weights, b.vote_weights);
        assert_eq!(a.models, b.models);
        assert!(a.vote_weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn constant_protected_column_is_rejected() {
        let ds = data(100, 0.4, 3);
        let ones = vec![1u8; ds.n_rows()];
        let constant = ds.with_protected(SYNTH_PROTECTED, &ones).unwrap();
        assert!(build_ensemble(&constant, SYNTH_PROTECTED, LearnerKind::Cart, 2, 0).is_err());
        assert!(build_ensemble(&ds, "nope", LearnerKind::Cart, 2, 0).is_err());
        assert!(build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::Cart, 0, 0).is_err());
        assert!(build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::RandomForest, 1, 0).is_err());
    }

    #[test]
    fn pipeline_ignores_supplied_protected_values() {
        let ds = data(500, 0.4, 4);
        let s = split(&ds, 1).unwrap();
        let cfg = XFairConfig {
            classifier: LearnerKind::Cart,
            ..XFairConfig::default()
        };
        let p = XFairPipeline::build(&s.train, &[SYNTH_PROTECTED.to_string()], &cfg, 5).unwrap();
        let flipped = s.test.with_protected_flipped(SYNTH_PROTECTED).unwrap();
        assert_eq!(p.predict(&s.test).unwrap(), p.predict(&flipped).unwrap());
        let fr = flip_rate(|d| p.predict(d), &s.test, SYNTH_PROTECTED).unwrap();
        assert_eq!(fr, 0.0);

        let batch = p.predict(&s.test).unwrap();
        for r in [0, 7, 33] {
            assert_eq!(p.predict(&s.test.select_rows(&[r])).unwrap()[0], batch[r]);
        }
    }

    #[test]
    fn lr_ensemble_explains_with_coefficients() {
        let ds = data(400, 0.4, 5);
        let ens = build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::LogisticRegression, 2, 1).unwrap();
        let e = ens.explain_bias().unwrap();
        assert_eq!(e.kind, crate::learners::ExplanationKind::Coefficients);
        assert_eq!(e.target.as_deref(), Some(SYNTH_PROTECTED));
        assert_eq!(e.entries.len(), ds.x.ncols() - 1);
        assert!(e.entries.iter().all(|x| x.description != SYNTH_PROTECTED));
    }

    #[test]
    fn ensemble_learns_protected_from_proxies() {
        let ds = data(2000, 0.4, 8);
        let ens = build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::Cart, 5, 2).unwrap();
        assert!(ens.vote_weights.iter().all(|w| *w > 0.5));
        let synth = ens.synthesize_for(&ds).unwrap();
        let real = ds.protected(SYNTH_PROTECTED).unwrap();
        assert!(balanced_accuracy(&real, &synth) > 0.5);
    }

    #[test]
    fn identity_synthesis_gives_empty_flipped_subset() {
        let ds = data(400, 0.4, 9);
        let s = split(&ds, 2).unwrap();
        let cfg = XFairConfig {
            classifier: LearnerKind::Cart,
            ..XFairConfig::default()
        };
        let mut p = XFairPipeline::build(&s.train, &[SYNTH_PROTECTED.to_string()], &cfg, 1).unwrap();
        // an extrapolator that reads the protected column itself reproduces it
        let pa_col = s.train.protected_index(SYNTH_PROTECTED).unwrap();
        let x = s.train.x.select_columns(&[pa_col]);
        let y = s.train.protected(SYNTH_PROTECTED).unwrap();
        let ens = &mut p.ensembles[0];
        ens.models = vec![Learner::extrapolator(LearnerKind::Cart).fit(&x, &y, None, 0).unwrap()];
        ens.vote_weights = vec![1.0];
        ens.feature_columns = vec![pa_col];
        ens.nonprotected_feature_names = vec![SYNTH_PROTECTED.to_string()];
        assert_eq!(p.predict(&s.test).unwrap(), p.classifier.predict(&s.test.x).unwrap());
        let r = relabel_ratio_report(&p, &s.test, SYNTH_PROTECTED).unwrap();
        assert_eq!(r.flipped_fav_ratio, None);
        assert_eq!(r.flipped_unfav_ratio, None);
        assert!(r.all_fav_ratio.is_some());
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let ds = data(200, 0.3, 6);
        let ens = build_ensemble(&ds, SYNTH_PROTECTED, LearnerKind::Cart, 1, 0).unwrap();
        assert!(ens.synthesize_protected(&Matrix::zeros(3, 2)).is_err());
    }
}
