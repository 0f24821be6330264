//! SMOTE oversampling on encoded (all-numeric) features.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::tabular::FeatureLayout;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
    /// Columns repaired after interpolation (one-hot argmax, binary rounding).
    pub layout: FeatureLayout,
}

impl SmoteConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            k_neighbors: 5,
            seed,
            layout: FeatureLayout::default(),
        }
    }

    pub fn with_layout(mut self, layout: FeatureLayout) -> Self {
        self.layout = layout;
        self
    }
}

/// The `k` nearest members of `pool` to `pool[target]` (excluding itself),
/// ties broken by row index.
pub(crate) fn nearest_in_pool(x: &Matrix, pool: &[usize], target: usize, k: usize) -> Vec<usize> {
    let anchor = x.row(pool[target]);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (i, &r) in pool.iter().enumerate() {
        if i == target || k == 0 {
            continue;
        }
        let bound = if best.len() == k { best[k - 1].0 } else { f64::INFINITY };
        // partial sums only grow, so stop once the current k-th is beaten
        let mut d = 0.0;
        for (a, b) in anchor.iter().zip(x.row(r)) {
            d += (a - b) * (a - b);
            if d > bound {
                break;
            }
        }
        if d > bound || (d == bound && best.len() == k && r > best[k - 1].1) {
            continue;
        }
        let at = best.partition_point(|&(bd, br)| bd < d || (bd == d && br < r));
        best.insert(at, (d, r));
        best.truncate(k);
    }
    best.into_iter().map(|(_, r)| r).collect()
}

/// Lazily computed neighbor lists, keyed by pool position.
pub(crate) struct NeighborCache<'a> {
    x: &'a Matrix,
    pool: &'a [usize],
    k: usize,
    cache: HashMap<usize, Vec<usize>>,
}

impl<'a> NeighborCache<'a> {
    pub(crate) fn new(x: &'a Matrix, pool: &'a [usize], k: usize) -> Self {
        Self {
            x,
            pool,
            k,
            cache: HashMap::new(),
        }
    }

    pub(crate) fn get(&mut self, pos: usize) -> &[usize] {
        let (x, pool, k) = (self.x, self.pool, self.k);
        self.cache
            .entry(pos)
            .or_insert_with(|| nearest_in_pool(x, pool, pos, k))
    }
}

/// Oversamples the minority class to the majority count.
///
/// Original rows come first, unchanged; synthetic rows follow. Each synthetic
/// row is `x + u * (n - x)` for a uniformly chosen minority row `x`, one of
/// its `k` nearest minority neighbors `n` and `u` in [0, 1).
pub fn smote_balance(x: &Matrix, labels: &[u8], cfg: &SmoteConfig) -> Result<(Matrix, Vec<u8>)> {
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("SMOTE on empty input".into()));
    }
    if x.nrows() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    if cfg.k_neighbors == 0 {
        return Err(Error::InvalidInput("k_neighbors must be at least 1".into()));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let zeros = labels.len() - ones;
    if ones == 0 || zeros == 0 {
        return Err(Error::SingleClass);
    }
    let mut out_x = x.clone();
    let mut out_y = labels.to_vec();
    if ones == zeros {
        return Ok((out_x, out_y));
    }
    let minority_label = u8::from(ones < zeros);
    let minority: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == minority_label)
        .collect();
    let needed = ones.abs_diff(zeros);

    if minority.len() == 1 {
        log::warn!("SMOTE: single minority row, synthetic rows duplicate it");
        for _ in 0..needed {
            out_x.push_row(x.row(minority[0]))?;
            out_y.push(minority_label);
        }
        return Ok((out_x, out_y));
    }
    let k = if cfg.k_neighbors >= minority.len() {
        log::warn!(
            "SMOTE: k={} clamped to {} (minority size {})",
            cfg.k_neighbors,
            minority.len() - 1,
            minority.len()
        );
        minority.len() - 1
    } else {
        cfg.k_neighbors
    };

    let mut rng = rng::rng_from_seed(cfg.seed);
    let mut neighbors = NeighborCache::new(x, &minority, k);
    let mut synth = vec![0.0; x.ncols()];
    for _ in 0..needed {
        let pos = rng.random_range(0..minority.len());
        let nbrs = neighbors.get(pos);
        let nb = nbrs[rng.random_range(0..nbrs.len())];
        let u: f64 = rng.random();
        let base = x.row(minority[pos]);
        let other = x.row(nb);
        for ((s, a), b) in synth.iter_mut().zip(base).zip(other) {
            *s = a + u * (b - a);
        }
        cfg.layout.repair(&mut synth);
        out_x.push_row(&synth)?;
        out_y.push(minority_label);
    }
    Ok((out_x, out_y))
}
