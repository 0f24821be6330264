//! Scott-Knott ranking of treatments with a Cliff's delta effect-size gate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cliff's delta magnitude below which an effect counts as "small".
pub const SMALL_EFFECT: f64 = 0.147;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentSamples {
    pub name: String,
    pub values: Vec<f64>,
}

impl TreatmentSamples {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Rank per treatment; 1 is best and ranks are contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RankAssignment {
    pub ranks: BTreeMap<String, usize>,
}

impl RankAssignment {
    pub fn rank(&self, name: &str) -> Option<usize> {
        self.ranks.get(name).copied()
    }
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// `P(a > b) - P(a < b)` over all pairs.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Cliff's delta needs non-empty samples".into()));
    }
    let mut sorted_b = b.to_vec();
    sorted_b.sort_by(f64::total_cmp);
    let mut more = 0u64;
    let mut less = 0u64;
    for &x in a {
        let below = sorted_b.partition_point(|&v| v < x) as u64;
        let not_above = sorted_b.partition_point(|&v| v <= x) as u64;
        more += below;
        less += sorted_b.len() as u64 - not_above;
    }
    Ok((more as f64 - less as f64) / (a.len() as f64 * b.len() as f64))
}

/// Expected squared deviation of the two halves' means from the overall mean
/// when `l` is cut at `cut`.
pub fn split_objective(l: &[f64], cut: usize) -> Result<f64> {
    if cut == 0 || cut >= l.len() {
        return Err(Error::InvalidInput(format!(
            "cut {cut} outside 1..{} for a list of {}",
            l.len().saturating_sub(1),
            l.len()
        )));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let all = mean(l);
    let (l1, l2) = l.split_at(cut);
    let n = l.len() as f64;
    Ok(l1.len() as f64 / n * (mean(l1) - all).powi(2) + l2.len() as f64 / n * (mean(l2) - all).powi(2))
}

/// Cut maximizing [`split_objective`]; the first one wins on ties.
pub fn best_cut(l: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for cut in 1..l.len() {
        let e = split_objective(l, cut).expect("cut in range");
        // relative slack so that cuts equal up to rounding resolve to the first
        if best.is_none_or(|(_, b)| e > b + 64.0 * f64::EPSILON * b.abs()) {
            best = Some((cut, e));
        }
    }
    best.map(|(c, _)| c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScottKnottConfig {
    pub smaller_is_better: bool,
    pub effect_threshold: f64,
}

impl Default for ScottKnottConfig {
    fn default() -> Self {
        Self {
            smaller_is_better: true,
            effect_threshold: SMALL_EFFECT,
        }
    }
}

pub fn scott_knott_rank(treatments: &[TreatmentSamples], smaller_is_better: bool) -> Result<RankAssignment> {
    scott_knott_rank_with(
        treatments,
        &ScottKnottConfig {
            smaller_is_better,
            ..ScottKnottConfig::default()
        },
    )
}

pub fn scott_knott_rank_with(
    treatments: &[TreatmentSamples],
    cfg: &ScottKnottConfig,
) -> Result<RankAssignment> {
    if treatments.is_empty() {
        return Err(Error::InvalidInput("Scott-Knott needs at least one treatment".into()));
    }
    // Oriented so that smaller is better.
    let mut items: Vec<(String, Vec<f64>, f64)> = Vec::with_capacity(treatments.len());
    for t in treatments {
        let values: Vec<f64> = if cfg.smaller_is_better {
            t.values.clone()
        } else {
            t.values.iter().map(|v| -v).collect()
        };
        let med = median(&values).ok_or_else(|| {
            Error::InvalidInput(format!("treatment `{}` has no values", t.name))
        })?;
        items.push((t.name.clone(), values, med));
    }
    items.sort_by(|a, b| a.2.total_cmp(&b.2).then_with(|| a.0.cmp(&b.0)));

    let medians: Vec<f64> = items.iter().map(|i| i.2).collect();
    let mut group_of = vec![0usize; items.len()];
    let mut next_group = 0usize;
    let mut stack = vec![(0usize, items.len())];
    let mut segments = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        let accepted = (hi - lo >= 2)
            .then(|| best_cut(&medians[lo..hi]))
            .flatten()
            .and_then(|cut| {
                let pooled = |r: std::ops::Range<usize>| -> Vec<f64> {
                    items[r].iter().flat_map(|i| i.1.iter().copied()).collect()
                };
                let delta = cliffs_delta(&pooled(lo..lo + cut), &pooled(lo + cut..hi)).ok()?;
                (delta.abs() >= cfg.effect_threshold).then_some(lo + cut)
            });
        match accepted {
            Some(mid) => {
                stack.push((mid, hi));
                stack.push((lo, mid));
            }
            None => segments.push((lo, hi)),
        }
    }
    // Segments come out left to right because the left half is always popped first.
    for (lo, hi) in segments {
        next_group += 1;
        for g in &mut group_of[lo..hi] {
            *g = next_group;
        }
    }
    Ok(RankAssignment {
        ranks: items
            .iter()
            .zip(group_of)
            .map(|(i, g)| (i.0.clone(), g))
            .collect(),
    })
}
