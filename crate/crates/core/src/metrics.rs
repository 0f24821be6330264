//! Group fairness, flip rate and predictive performance.
//!
//! Label 1 is favorable and protected value 1 is privileged. Group metrics
//! are reported as absolute differences by default so that smaller is always
//! better.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::TabularDataset;

/// Disparate-impact deviation reported when the privileged favorable rate is
/// zero but the unprivileged one is not.
pub const DI_SENTINEL: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    /// Share of rows predicted favorable.
    pub fn positive_rate(&self) -> Option<f64> {
        ratio(self.tp + self.fp, self.total())
    }

    fn record(&mut self, truth: u8, pred: u8) {
        match (truth, pred) {
            (1, 1) => self.tp += 1,
            (0, 1) => self.fp += 1,
            (0, 0) => self.tn += 1,
            _ => self.fn_ += 1,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedConfusion {
    pub privileged: ConfusionMatrix,
    pub unprivileged: ConfusionMatrix,
}

fn check_lengths(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{what}: lengths {a} and {b} differ")));
    }
    if a == 0 {
        return Err(Error::InvalidInput(format!("{what}: empty input")));
    }
    Ok(())
}

pub fn group_confusion(y_true: &[u8], y_pred: &[u8], pa: &[u8]) -> Result<GroupedConfusion> {
    check_lengths(y_true.len(), y_pred.len(), "group_confusion")?;
    check_lengths(y_true.len(), pa.len(), "group_confusion")?;
    let mut gc = GroupedConfusion::default();
    for ((&t, &p), &g) in y_true.iter().zip(y_pred).zip(pa) {
        let m = if g == 1 {
            &mut gc.privileged
        } else {
            &mut gc.unprivileged
        };
        m.record(t, p);
    }
    Ok(gc)
}

/// Sign convention for group metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MetricConvention {
    /// |AOD|, |EOD|, |SPD| and |1 - DI|.
    #[default]
    Absolute,
    /// Signed unprivileged-minus-privileged differences and the raw DI ratio.
    Signed,
}

/// Fairness metrics; `None` marks a metric undefined for lack of rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub aod: Option<f64>,
    pub eod: Option<f64>,
    pub spd: Option<f64>,
    pub di_deviation: Option<f64>,
    pub fr: f64,
}

pub fn fairness_report(gc: &GroupedConfusion, flip_rate: f64) -> FairnessReport {
    fairness_report_with(gc, flip_rate, MetricConvention::Absolute)
}

pub fn fairness_report_with(
    gc: &GroupedConfusion,
    flip_rate: f64,
    convention: MetricConvention,
) -> FairnessReport {
    let (u, p) = (&gc.unprivileged, &gc.privileged);
    let fin = |v: f64| match convention {
        MetricConvention::Absolute => v.abs(),
        MetricConvention::Signed => v,
    };
    let diff = |a: Option<f64>, b: Option<f64>| Some(a? - b?);
    let tpr_diff = diff(u.tpr(), p.tpr());
    let fpr_diff = diff(u.fpr(), p.fpr());
    let aod = tpr_diff.zip(fpr_diff).map(|(t, f)| fin((f + t) / 2.0));
    let eod = tpr_diff.map(fin);
    let (ru, rp) = (u.positive_rate(), p.positive_rate());
    let spd = diff(ru, rp).map(fin);
    let di_deviation = ru.zip(rp).map(|(ru, rp)| match convention {
        MetricConvention::Absolute => {
            if rp == 0.0 {
                if ru == 0.0 {
                    0.0
                } else {
                    DI_SENTINEL
                }
            } else {
                (1.0 - ru / rp).abs()
            }
        }
        MetricConvention::Signed => {
            if rp == 0.0 {
                if ru == 0.0 {
                    1.0
                } else {
                    DI_SENTINEL
                }
            } else {
                ru / rp
            }
        }
    });
    FairnessReport {
        aod,
        eod,
        spd,
        di_deviation,
        fr: flip_rate,
    }
}

/// Situation testing: the share of rows whose prediction changes when the
/// protected attribute is flipped.
pub fn flip_rate<F>(model_predict: F, test: &TabularDataset, protected_name: &str) -> Result<f64>
where
    F: Fn(&TabularDataset) -> Result<Vec<u8>>,
{
    if test.n_rows() == 0 {
        return Err(Error::InvalidInput("flip rate on empty test set".into()));
    }
    let flipped = test.with_protected_flipped(protected_name)?;
    let before = model_predict(test)?;
    let after = model_predict(&flipped)?;
    check_lengths(before.len(), after.len(), "flip_rate")?;
    let changed = before.iter().zip(&after).filter(|(a, b)| a != b).count();
    Ok(changed as f64 / before.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn performance_report(y_true: &[u8], y_pred: &[u8]) -> Result<PerformanceReport> {
    check_lengths(y_true.len(), y_pred.len(), "performance_report")?;
    let mut m = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m.record(t, p);
    }
    let accuracy = (m.tp + m.tn) as f64 / m.total() as f64;
    let precision = ratio(m.tp, m.tp + m.fp).unwrap_or(0.0);
    let recall = ratio(m.tp, m.tp + m.fn_).unwrap_or(0.0);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PerformanceReport {
        accuracy,
        precision,
        recall,
        f1,
    })
}
