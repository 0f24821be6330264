//! Comparison mitigators: Reweighing, Fair-SMOTE rebalancing and the random
//! protected-attribute shuffle.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerKind, SampleWeights};
use crate::rng;
use crate::sampling::NeighborCache;
use crate::tabular::TabularDataset;

/// Row counts per (protected value, label), indexed `[s][y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubgroupCounts {
    pub counts: [[usize; 2]; 2],
}

impl SubgroupCounts {
    pub fn of(pa: &[u8], y: &[u8]) -> Self {
        let mut counts = [[0usize; 2]; 2];
        for (&s, &l) in pa.iter().zip(y) {
            counts[usize::from(s)][usize::from(l)] += 1;
        }
        Self { counts }
    }

    pub fn get(&self, protected: u8, label: u8) -> usize {
        self.counts[usize::from(protected)][usize::from(label)]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn max(&self) -> usize {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }

    fn first_below(&self, min: usize) -> Option<(u8, u8)> {
        for s in [1u8, 0] {
            for l in [1u8, 0] {
                if self.get(s, l) < min {
                    return Some((s, l));
                }
            }
        }
        None
    }
}

/// Weight `P(s) P(y) / P(s, y)` for every row of subgroup `(s, y)`.
pub fn reweigh(train: &TabularDataset, protected_name: &str) -> Result<SampleWeights> {
    let pa = train.protected(protected_name)?;
    let c = SubgroupCounts::of(&pa, &train.y);
    if let Some((protected, label)) = c.first_below(1) {
        return Err(Error::EmptySubgroup { protected, label });
    }
    let n = c.total() as f64;
    let weight = |s: u8, l: u8| {
        let ps = (c.get(s, 0) + c.get(s, 1)) as f64;
        let py = (c.get(0, l) + c.get(1, l)) as f64;
        ps * py / (n * c.get(s, l) as f64)
    };
    SampleWeights::new(pa.iter().zip(&train.y).map(|(&s, &l)| weight(s, l)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairSmoteConfig {
    /// Per-feature crossover probability.
    pub cr: f64,
    /// Mutation amplitude.
    pub f: f64,
    pub k_neighbors: usize,
    pub seed: u64,
    /// Runs [`situation_testing_filter`] after rebalancing.
    pub situation_filter: bool,
}

impl FairSmoteConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            cr: 0.8,
            f: 0.8,
            k_neighbors: 5,
            seed,
            situation_filter: false,
        }
    }
}

/// Oversamples every (protected, label) subgroup to the largest subgroup's
/// size. Original rows come first, in their original order.
pub fn fair_smote_balance(
    train: &TabularDataset,
    protected_name: &str,
    cfg: &FairSmoteConfig,
) -> Result<TabularDataset> {
    if !(cfg.cr > 0.0 && cfg.cr <= 1.0) {
        return Err(Error::InvalidInput(format!("cr must lie in (0, 1], got {}", cfg.cr)));
    }
    if !(cfg.f > 0.0 && cfg.f <= 2.0) {
        return Err(Error::InvalidInput(format!("f must lie in (0, 2], got {}", cfg.f)));
    }
    if cfg.k_neighbors < 2 {
        return Err(Error::InvalidInput("k_neighbors must be at least 2".into()));
    }
    let pa = train.protected(protected_name)?;
    let counts = SubgroupCounts::of(&pa, &train.y);
    if let Some((protected, label)) = counts.first_below(3) {
        if counts.get(protected, label) == 0 {
            return Err(Error::EmptySubgroup { protected, label });
        }
        return Err(Error::InvalidInput(format!(
            "subgroup (protected={protected}, label={label}) has {} rows; Fair-SMOTE needs at least 3",
            counts.get(protected, label)
        )));
    }
    let target = counts.max();
    let layout = train.layout();
    let mut rng = rng::rng_from_seed(cfg.seed);
    let mut x = train.x.clone();
    let mut y = train.y.clone();
    let mut child = vec![0.0; x.ncols()];

    for s in [1u8, 0] {
        for l in [1u8, 0] {
            let members: Vec<usize> = (0..pa.len())
                .filter(|&r| pa[r] == s && train.y[r] == l)
                .collect();
            let k = cfg.k_neighbors.min(members.len() - 1);
            let mut neighbors = NeighborCache::new(&train.x, &members, k);
            for _ in members.len()..target {
                let pos = rng.random_range(0..members.len());
                let pool = neighbors.get(pos);
                let ia = rng.random_range(0..pool.len());
                let mut ib = rng.random_range(0..pool.len() - 1);
                if ib >= ia {
                    ib += 1;
                }
                let (p, a, b) = (
                    train.x.row(members[pos]),
                    train.x.row(pool[ia]),
                    train.x.row(pool[ib]),
                );
                for j in 0..child.len() {
                    child[j] = if rng.random::<f64>() < cfg.cr {
                        (p[j] + cfg.f * (a[j] - b[j])).clamp(0.0, 1.0)
                    } else {
                        p[j]
                    };
                }
                layout.repair(&mut child);
                x.push_row(&child)?;
                y.push(l);
            }
        }
    }
    let balanced = TabularDataset::from_parts(train.name.clone(), x, y, train.encoding.clone())?;
    if cfg.situation_filter {
        situation_testing_filter(&balanced, protected_name, cfg.seed)
    } else {
        Ok(balanced)
    }
}

pub const DEFAULT_MAX_DROP_FRACTION: f64 = 0.5;

/// Drops training rows whose default-classifier prediction changes when the
/// protected attribute is flipped.
pub fn situation_testing_filter(
    train: &TabularDataset,
    protected_name: &str,
    seed: u64,
) -> Result<TabularDataset> {
    situation_testing_filter_with(
        train,
        protected_name,
        &Learner::classifier(LearnerKind::RandomForest),
        seed,
        DEFAULT_MAX_DROP_FRACTION,
    )
}

pub fn situation_testing_filter_with(
    train: &TabularDataset,
    protected_name: &str,
    learner: &Learner,
    seed: u64,
    max_drop_fraction: f64,
) -> Result<TabularDataset> {
    let ones = train.y.iter().filter(|&&l| l == 1).count();
    if ones < 10 || train.n_rows() - ones < 10 {
        return Err(Error::InvalidInput(
            "situation testing needs at least 10 rows per class".into(),
        ));
    }
    let model = learner.fit(&train.x, &train.y, None, seed)?;
    let before = model.predict(&train.x)?;
    let after = model.predict(&train.with_protected_flipped(protected_name)?.x)?;
    let keep: Vec<usize> = (0..before.len()).filter(|&r| before[r] == after[r]).collect();
    let dropped = before.len() - keep.len();
    if dropped as f64 > max_drop_fraction * before.len() as f64 {
        return Err(Error::DegenerateFilter {
            dropped,
            total: before.len(),
            limit: max_drop_fraction,
        });
    }
    if dropped > 0 {
        log::debug!("situation testing dropped {dropped} of {} rows", before.len());
    }
    Ok(train.select_rows(&keep))
}

/// Copy of `test` with the protected column uniformly permuted.
pub fn random_shuffle_protected(
    test: &TabularDataset,
    protected_name: &str,
    seed: u64,
) -> Result<TabularDataset> {
    let mut pa = test.protected(protected_name)?;
    pa.shuffle(&mut rng::rng_from_seed(seed));
    test.with_protected(protected_name, &pa)
}
