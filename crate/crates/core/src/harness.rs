//! Repeated seeded trials over mitigation methods, result tables, Scott-Knott
//! summaries, runtime ratios and relabel-ratio figure data.
//!
//! Repeat `i` splits with seed `base_seed + i`; every method in that repeat
//! sees the same split and the same classifier seed.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fair_smote_balance, random_shuffle_protected, reweigh, FairSmoteConfig};
use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerKind, SampleWeights};
use crate::metrics::{
    fairness_report, flip_rate, group_confusion, performance_report, FairnessReport,
    PerformanceReport,
};
use crate::rng::derive_seed;
use crate::stats::{median, scott_knott_rank, TreatmentSamples};
use crate::tabular::{ingest, load_manifest, split, TabularDataset};
use crate::xfair::{relabel_ratio_report, EnsembleConfig, XFairPipeline};

pub const THREADS_ENV: &str = "FAIRBENCH_THREADS";
pub const DEFAULT_REPEATS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    BaselineRf,
    Random,
    Reweighing,
    FairSmote,
    XFair,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::BaselineRf,
        MethodKind::Random,
        MethodKind::Reweighing,
        MethodKind::FairSmote,
        MethodKind::XFair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::BaselineRf => "baseline_rf",
            MethodKind::Random => "random",
            MethodKind::Reweighing => "reweighing",
            MethodKind::FairSmote => "fair_smote",
            MethodKind::XFair => "xfair",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown method `{s}` (expected one of baseline_rf, random, reweighing, fair_smote, xfair)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest_path: PathBuf,
    /// Attributes to evaluate and mitigate; empty means all in the manifest.
    pub protected: Vec<String>,
    pub methods: Vec<MethodKind>,
    pub repeats: usize,
    pub base_seed: u64,
    pub classifier: LearnerKind,
    pub extrapolation: LearnerKind,
    pub budget: usize,
    pub output_dir: PathBuf,
    /// Concurrent repeats; `None` reads `FAIRBENCH_THREADS`, then falls back
    /// to the available parallelism.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(manifest_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            manifest_path: manifest_path.into(),
            protected: Vec::new(),
            methods: MethodKind::ALL.to_vec(),
            repeats: DEFAULT_REPEATS,
            base_seed: 0,
            classifier: LearnerKind::RandomForest,
            extrapolation: LearnerKind::Cart,
            budget: crate::xfair::DEFAULT_BUDGET,
            output_dir: output_dir.into(),
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidInput("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("no methods selected".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidInput("budget must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub method: String,
    pub protected: String,
    pub seed: u64,
    pub fairness: FairnessReport,
    pub performance: PerformanceReport,
    pub wall_clock_seconds: f64,
}

fn thread_count(cfg: &ExperimentConfig) -> usize {
    if let Some(n) = cfg.threads {
        return n.max(1);
    }
    match std::env::var(THREADS_ENV).ok().map(|v| v.trim().parse::<usize>()) {
        Some(Ok(n)) if n > 0 => n,
        Some(_) => {
            log::warn!("ignoring invalid {THREADS_ENV}");
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

/// Loads the manifest, ingests its CSV and runs every trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let manifest = load_manifest(&cfg.manifest_path)?;
    let ds = ingest(&manifest, None)?;
    run_trials(&ds, cfg)
}

/// Runs every (repeat, method) trial on an already ingested dataset. Records
/// are ordered by repeat, then method order in `cfg`, then protected order.
pub fn run_trials(ds: &TabularDataset, cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let protected = if cfg.protected.is_empty() {
        ds.protected_names()
    } else {
        for p in &cfg.protected {
            ds.protected_index(p)?;
        }
        cfg.protected.clone()
    };
    if protected.is_empty() {
        return Err(Error::InvalidInput("dataset has no protected attribute".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let per_repeat: Vec<Vec<RunRecord>> = pool.install(|| {
        (0..cfg.repeats as u64)
            .into_par_iter()
            .map(|i| run_repeat(ds, cfg, &protected, cfg.base_seed.wrapping_add(i)))
            .collect::<Result<_>>()
    })?;
    Ok(per_repeat.into_iter().flatten().collect())
}

struct Trial<'a> {
    ds_name: &'a str,
    test: &'a TabularDataset,
    seed: u64,
    method: MethodKind,
}

impl Trial<'_> {
    fn record<F>(&self, protected: &str, preds: &[u8], seconds: f64, predict: F) -> Result<RunRecord>
    where
        F: Fn(&TabularDataset) -> Result<Vec<u8>>,
    {
        let real = self.test.protected(protected)?;
        let gc = group_confusion(&self.test.y, preds, &real)?;
        let fr = flip_rate(predict, self.test, protected)?;
        Ok(RunRecord {
            dataset: self.ds_name.to_string(),
            method: self.method.name().to_string(),
            protected: protected.to_string(),
            seed: self.seed,
            fairness: fairness_report(&gc, fr),
            performance: performance_report(&self.test.y, preds)?,
            wall_clock_seconds: seconds,
        })
    }
}

/// Shuffles every listed protected column, each with its own stream.
fn shuffle_all(test: &TabularDataset, protected: &[String], seed: u64) -> Result<TabularDataset> {
    let mut out = test.clone();
    for (k, p) in protected.iter().enumerate() {
        out = random_shuffle_protected(&out, p, derive_seed(seed, 10 + k as u64))?;
    }
    Ok(out)
}

fn run_repeat(
    ds: &TabularDataset,
    cfg: &ExperimentConfig,
    protected: &[String],
    seed: u64,
) -> Result<Vec<RunRecord>> {
    let s = split(ds, seed)?;
    let (train, test) = (&s.train, &s.test);
    let fit_seed = derive_seed(seed, 1);
    let classifier = Learner::classifier(cfg.classifier);
    let mut records = Vec::new();

    for &method in &cfg.methods {
        let trial = Trial {
            ds_name: &ds.name,
            test,
            seed,
            method,
        };
        let annotate = |e: Error| Error::Trial {
            method: method.name().to_string(),
            seed,
            source: Box::new(e),
        };
        let result: Result<()> = (|| {
            match method {
                MethodKind::BaselineRf => {
                    let t = Instant::now();
                    let model = classifier.fit(&train.x, &train.y, None, fit_seed)?;
                    let preds = model.predict(&test.x)?;
                    let secs = t.elapsed().as_secs_f64();
                    for p in protected {
                        records.push(trial.record(p, &preds, secs, |d| model.predict(&d.x))?);
                    }
                }
                MethodKind::Random => {
                    let shuffle_seed = derive_seed(seed, 2);
                    let t = Instant::now();
                    let model = classifier.fit(&train.x, &train.y, None, fit_seed)?;
                    let preds = model.predict(&shuffle_all(test, protected, shuffle_seed)?.x)?;
                    let secs = t.elapsed().as_secs_f64();
                    let predict =
                        |d: &TabularDataset| model.predict(&shuffle_all(d, protected, shuffle_seed)?.x);
                    for p in protected {
                        records.push(trial.record(p, &preds, secs, predict)?);
                    }
                }
                MethodKind::Reweighing => {
                    for p in protected {
                        let t = Instant::now();
                        let w: SampleWeights = reweigh(train, p)?;
                        let model = classifier.fit(&train.x, &train.y, Some(&w), fit_seed)?;
                        let preds = model.predict(&test.x)?;
                        let secs = t.elapsed().as_secs_f64();
                        records.push(trial.record(p, &preds, secs, |d| model.predict(&d.x))?);
                    }
                }
                MethodKind::FairSmote => {
                    for p in protected {
                        let t = Instant::now();
                        let balanced =
                            fair_smote_balance(train, p, &FairSmoteConfig::new(derive_seed(seed, 3)))?;
                        let model = classifier.fit(&balanced.x, &balanced.y, None, fit_seed)?;
                        let preds = model.predict(&test.x)?;
                        let secs = t.elapsed().as_secs_f64();
                        records.push(trial.record(p, &preds, secs, |d| model.predict(&d.x))?);
                    }
                }
                MethodKind::XFair => {
                    let ensemble = EnsembleConfig {
                        model_kind: cfg.extrapolation,
                        budget: cfg.budget,
                        ..EnsembleConfig::default()
                    };
                    let t = Instant::now();
                    let model = classifier.fit(&train.x, &train.y, None, fit_seed)?;
                    let pipeline = XFairPipeline::with_classifier(
                        train,
                        protected,
                        model,
                        &ensemble,
                        derive_seed(seed, 4),
                    )?;
                    let preds = pipeline.predict(test)?;
                    let secs = t.elapsed().as_secs_f64();
                    for p in protected {
                        records.push(trial.record(p, &preds, secs, |d| pipeline.predict(d))?);
                    }
                }
            }
            Ok(())
        })();
        result.map_err(annotate)?;
        log::info!("{} seed {seed}: {method} done", ds.name);
    }
    Ok(records)
}

pub const RESULT_COLUMNS: [&str; 14] = [
    "dataset",
    "method",
    "protected",
    "seed",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "aod",
    "eod",
    "spd",
    "di_deviation",
    "fr",
    "wall_clock_seconds",
];

/// Metrics reported in summaries, in column order.
pub const METRICS: [&str; 9] = [
    "accuracy",
    "precision",
    "recall",
    "f1",
    "aod",
    "eod",
    "spd",
    "di_deviation",
    "fr",
];

pub const NA: &str = "NA";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |v| v.to_string())
}

fn parse_opt(token: &str, column: &str, row: usize) -> Result<Option<f64>> {
    if token == NA {
        return Ok(None);
    }
    token.parse().map(Some).map_err(|_| Error::NonNumeric {
        column: column.to_string(),
        row,
        token: token.to_string(),
    })
}

/// Value of a summary metric; fairness metrics may be undefined.
pub fn metric_value(r: &RunRecord, metric: &str) -> Option<f64> {
    match metric {
        "accuracy" => Some(r.performance.accuracy),
        "precision" => Some(r.performance.precision),
        "recall" => Some(r.performance.recall),
        "f1" => Some(r.performance.f1),
        "aod" => r.fairness.aod,
        "eod" => r.fairness.eod,
        "spd" => r.fairness.spd,
        "di_deviation" => r.fairness.di_deviation,
        "fr" => Some(r.fairness.fr),
        _ => None,
    }
}

pub fn smaller_is_better(metric: &str) -> bool {
    !matches!(metric, "accuracy" | "precision" | "recall" | "f1")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_results<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for r in records {
        let mut row = vec![
            r.dataset.clone(),
            r.method.clone(),
            r.protected.clone(),
            r.seed.to_string(),
        ];
        row.extend(METRICS.iter().map(|m| fmt_opt(metric_value(r, m))));
        row.push(format!("{:.6}", r.wall_clock_seconds));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_results_file(records: &[RunRecord], path: &Path) -> Result<()> {
    write_results(records, fs::File::create(path).map_err(io_err(path))?)
}

pub fn read_results(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RESULT_COLUMNS {
        return Err(Error::InvalidInput(format!(
            "{}: expected columns {}",
            path.display(),
            RESULT_COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let num = |c: usize| parse_opt(&rec[c], RESULT_COLUMNS[c], row);
        let req = |c: usize| {
            num(c)?.ok_or_else(|| Error::NonNumeric {
                column: RESULT_COLUMNS[c].to_string(),
                row,
                token: NA.to_string(),
            })
        };
        out.push(RunRecord {
            dataset: rec[0].to_string(),
            method: rec[1].to_string(),
            protected: rec[2].to_string(),
            seed: rec[3].parse().map_err(|_| Error::NonNumeric {
                column: "seed".into(),
                row,
                token: rec[3].to_string(),
            })?,
            performance: PerformanceReport {
                accuracy: req(4)?,
                precision: req(5)?,
                recall: req(6)?,
                f1: req(7)?,
            },
            fairness: FairnessReport {
                aod: num(8)?,
                eod: num(9)?,
                spd: num(10)?,
                di_deviation: num(11)?,
                fr: req(12)?,
            },
            wall_clock_seconds: req(13)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub protected: String,
    pub metric: String,
    pub method: String,
    /// Median over repeats where the metric is defined.
    pub median: Option<f64>,
    /// Scott-Knott rank within (dataset, protected, metric); 1 is best.
    pub rank: Option<usize>,
    pub defined_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

fn first_seen_order<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in it {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Median and Scott-Knott rank of every metric for every method, per
/// (dataset, protected attribute).
pub fn summarize(records: &[RunRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to summarize".into()));
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.dataset, &r.protected)).or_default().push(r);
    }
    let mut rows = Vec::new();
    for ((dataset, protected), recs) in groups {
        let methods = first_seen_order(recs.iter().map(|r| r.method.as_str()));
        for m in &methods {
            let n = recs.iter().filter(|r| r.method == *m).count();
            if n < 2 {
                return Err(Error::InvalidInput(format!(
                    "method `{m}` on {dataset}/{protected} has {n} repeat(s); ranking needs at least 2"
                )));
            }
        }
        for metric in METRICS {
            let samples: Vec<TreatmentSamples> = methods
                .iter()
                .map(|m| {
                    let values = recs
                        .iter()
                        .filter(|r| r.method == *m)
                        .filter_map(|r| metric_value(r, metric))
                        .collect();
                    TreatmentSamples::new(*m, values)
                })
                .collect();
            let rankable: Vec<TreatmentSamples> =
                samples.iter().filter(|t| !t.values.is_empty()).cloned().collect();
            let ranks = if rankable.is_empty() {
                Default::default()
            } else {
                scott_knott_rank(&rankable, smaller_is_better(metric))?
            };
            for t in &samples {
                rows.push(SummaryRow {
                    dataset: dataset.to_string(),
                    protected: protected.to_string(),
                    metric: metric.to_string(),
                    method: t.name.clone(),
                    median: median(&t.values),
                    rank: ranks.rank(&t.name),
                    defined_runs: t.values.len(),
                });
            }
        }
    }
    Ok(Summary { rows })
}

impl Summary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset", "protected", "metric", "method", "median", "rank", "defined_runs"])?;
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.protected.clone(),
                r.metric.clone(),
                r.method.clone(),
                fmt_opt(r.median),
                r.rank.map_or_else(|| NA.to_string(), |k| k.to_string()),
                r.defined_runs.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// One aligned table per (dataset, protected): methods by metrics, each
    /// cell `median (rank)`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let blocks = first_seen_order(self.rows.iter().map(|r| r.dataset.as_str()));
        for dataset in blocks {
            let prots = first_seen_order(
                self.rows
                    .iter()
                    .filter(|r| r.dataset == dataset)
                    .map(|r| r.protected.as_str()),
            );
            for protected in prots {
                let rows: Vec<&SummaryRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.dataset == dataset && r.protected == protected)
                    .collect();
                let methods = first_seen_order(rows.iter().map(|r| r.method.as_str()));
                let mut table: Vec<Vec<String>> = vec![std::iter::once("method".to_string())
                    .chain(METRICS.iter().map(|m| m.to_string()))
                    .collect()];
                for m in &methods {
                    let mut line = vec![m.to_string()];
                    for metric in METRICS {
                        let cell = rows
                            .iter()
                            .find(|r| r.method == *m && r.metric == metric)
                            .map_or_else(String::new, |r| match (r.median, r.rank) {
                                (Some(v), Some(k)) => format!("{v:.3} ({k})"),
                                _ => NA.to_string(),
                            });
                        line.push(cell);
                    }
                    table.push(line);
                }
                let widths: Vec<usize> = (0..table[0].len())
                    .map(|c| table.iter().map(|l| l[c].len()).max().unwrap_or(0))
                    .collect();
                out.push_str(&format!("{dataset} / {protected}\n"));
                for line in &table {
                    let cells: Vec<String> = line
                        .iter()
                        .enumerate()
                        .map(|(c, s)| {
                            if c == 0 {
                                format!("{s:<w$}", w = widths[c])
                            } else {
                                format!("{s:>w$}", w = widths[c])
                            }
                        })
                        .collect();
                    out.push_str(cells.join("  ").trim_end());
                    out.push('\n');
                }
                out.push('\n');
            }
        }
        out
    }

    /// Writes `summary.csv` and `summary.txt` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv_path = dir.join("summary.csv");
        self.write_csv(fs::File::create(&csv_path).map_err(io_err(&csv_path))?)?;
        let txt_path = dir.join("summary.txt");
        fs::write(&txt_path, self.render_text()).map_err(io_err(&txt_path))?;
        Ok(())
    }
}

/// Writes `results.csv`, `summary.csv` and `summary.txt` into the output
/// directory. A single repeat skips the summary.
pub fn write_outputs(records: &[RunRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_results_file(records, &dir.join("results.csv"))?;
    let repeats = records.iter().map(|r| r.seed).collect::<std::collections::BTreeSet<_>>();
    if repeats.len() < 2 {
        log::warn!("summary skipped: ranking needs at least 2 repeats");
        return Ok(());
    }
    summarize(records)?.write_to_dir(dir)
}

/// Median wall-clock of `numerator` over median wall-clock of `denominator`.
pub fn runtime_ratio(records: &[RunRecord], numerator: &str, denominator: &str) -> Result<f64> {
    let med = |m: &str| {
        let times: Vec<f64> = records
            .iter()
            .filter(|r| r.method == m)
            .map(|r| r.wall_clock_seconds)
            .collect();
        median(&times).ok_or_else(|| Error::InvalidInput(format!("no records for method `{m}`")))
    };
    let (num, den) = (med(numerator)?, med(denominator)?);
    if den <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "median runtime of `{denominator}` is zero"
        )));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigRow {
    pub ratio_kind: String,
    pub scope: String,
    pub value: Option<f64>,
}

pub const FIG_COLUMNS: [&str; 3] = ["ratio_kind", "scope", "value"];

/// Writes the four relabel ratios (favorable/unfavorable by all/flipped).
pub fn export_fig_data(
    p: &XFairPipeline,
    test: &TabularDataset,
    protected_name: &str,
    out_path: &Path,
) -> Result<Vec<FigRow>> {
    let r = relabel_ratio_report(p, test, protected_name)?;
    let rows = vec![
        FigRow { ratio_kind: "favorable".into(), scope: "all".into(), value: r.all_fav_ratio },
        FigRow { ratio_kind: "favorable".into(), scope: "flipped".into(), value: r.flipped_fav_ratio },
        FigRow { ratio_kind: "unfavorable".into(), scope: "all".into(), value: r.all_unfav_ratio },
        FigRow { ratio_kind: "unfavorable".into(), scope: "flipped".into(), value: r.flipped_unfav_ratio },
    ];
    let file = fs::File::create(out_path).map_err(io_err(out_path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(FIG_COLUMNS)?;
    for row in &rows {
        w.write_record([row.ratio_kind.clone(), row.scope.clone(), fmt_opt(row.value)])?;
    }
    w.flush().map_err(io_err(out_path))?;
    Ok(rows)
}

pub fn read_fig_data(path: &Path) -> Result<Vec<FigRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows.push(FigRow {
            ratio_kind: rec[0].to_string(),
            scope: rec[1].to_string(),
            value: parse_opt(&rec[2], "value", i + 1)?,
        });
    }
    Ok(rows)
}
