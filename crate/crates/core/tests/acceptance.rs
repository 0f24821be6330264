//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The Adult check in criterion 3 runs when `FAIRBENCH_ADULT_CSV` points at a
//! headed Adult CSV, or when `data/adult.csv` exists at the workspace root.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fairbench::baselines::reweigh;
use fairbench::harness::{run_trials, ExperimentConfig, MethodKind, RunRecord};
use fairbench::learners::LearnerKind;
use fairbench::matrix::Matrix;
use fairbench::metrics::{
    fairness_report, fairness_report_with, flip_rate, group_confusion, performance_report,
    MetricConvention, DI_SENTINEL,
};
use fairbench::rng::rng_from_seed;
use fairbench::sampling::{smote_balance, SmoteConfig};
use fairbench::stats::{cliffs_delta, median, scott_knott_rank, split_objective, TreatmentSamples};
use fairbench::tabular::{
    ingest, load_manifest, synth_dataset, Encoding, SynthSpec, TabularDataset, SYNTH_PA_CORRELATED,
    SYNTH_PROTECTED,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn synth(rows: usize, bias: f64, seed: u64) -> TabularDataset {
    synth_dataset(&SynthSpec {
        rows,
        bias_strength: bias,
        seed,
    })
    .expect("synthetic dataset")
}

fn trials_config(methods: &[MethodKind], repeats: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("in-memory", "unused");
    cfg.methods = methods.to_vec();
    cfg.repeats = repeats;
    cfg
}

fn medians(records: &[RunRecord], method: &str, f: impl Fn(&RunRecord) -> Option<f64>) -> Option<f64> {
    let v: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method)
        .filter_map(&f)
        .collect();
    median(&v)
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairbench"))
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`fairbench {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

// 1 ------------------------------------------------------------------------

fn flip_rate_zero() -> Outcome {
    let ds = synth(5000, 0.4, 0);
    let records = run_trials(&ds, &trials_config(&[MethodKind::XFair], 10)).map_err(|e| e.to_string())?;
    check(records.len() == 10, "expected 10 records")?;
    let nonzero = records.iter().filter(|r| r.fairness.fr != 0.0).count();
    check(nonzero == 0, format!("{nonzero} repeats with FR != 0"))?;

    // other learners and a stronger bias
    let ds2 = synth(2000, 0.8, 7);
    let mut cfg = trials_config(&[MethodKind::XFair], 3);
    cfg.classifier = LearnerKind::LogisticRegression;
    cfg.extrapolation = LearnerKind::LogisticRegression;
    let r2 = run_trials(&ds2, &cfg).map_err(|e| e.to_string())?;
    check(r2.iter().all(|r| r.fairness.fr == 0.0), "FR != 0 with lr/lr")?;
    Ok("FR = 0 in 10/10 repeats (rf+cart, 5000 rows) and 3/3 (lr+lr, bias 0.8)".into())
}

// 2 ------------------------------------------------------------------------

struct OracleMetrics {
    aod: Option<f64>,
    eod: Option<f64>,
    spd: Option<f64>,
    di: Option<f64>,
    signed_eod: Option<f64>,
    signed_spd: Option<f64>,
    acc: f64,
    prec: f64,
    rec: f64,
    f1: f64,
}

/// Row-by-row recount, written without the library's confusion matrices.
fn oracle(y: &[u8], p: &[u8], pa: &[u8]) -> OracleMetrics {
    let n = y.len();
    let count = |f: &dyn Fn(usize) -> bool| (0..n).filter(|&i| f(i)).count() as f64;
    let rate = |num: f64, den: f64| if den == 0.0 { None } else { Some(num / den) };
    let tpr = |g: u8| {
        rate(
            count(&|i| pa[i] == g && y[i] == 1 && p[i] == 1),
            count(&|i| pa[i] == g && y[i] == 1),
        )
    };
    let fpr = |g: u8| {
        rate(
            count(&|i| pa[i] == g && y[i] == 0 && p[i] == 1),
            count(&|i| pa[i] == g && y[i] == 0),
        )
    };
    let pos = |g: u8| rate(count(&|i| pa[i] == g && p[i] == 1), count(&|i| pa[i] == g));
    let signed_eod = match (tpr(0), tpr(1)) {
        (Some(u), Some(v)) => Some(u - v),
        _ => None,
    };
    let aod = match (tpr(0), tpr(1), fpr(0), fpr(1)) {
        (Some(a), Some(b), Some(c), Some(d)) => Some(((a - b) + (c - d)).abs() / 2.0),
        _ => None,
    };
    let signed_spd = match (pos(0), pos(1)) {
        (Some(u), Some(v)) => Some(u - v),
        _ => None,
    };
    let di = match (pos(0), pos(1)) {
        (Some(u), Some(0.0)) => Some(if u == 0.0 { 0.0 } else { DI_SENTINEL }),
        (Some(u), Some(v)) => Some((1.0 - u / v).abs()),
        _ => None,
    };
    let tp = count(&|i| y[i] == 1 && p[i] == 1);
    let predicted = count(&|i| p[i] == 1);
    let actual = count(&|i| y[i] == 1);
    let prec = if predicted == 0.0 { 0.0 } else { tp / predicted };
    let rec = if actual == 0.0 { 0.0 } else { tp / actual };
    OracleMetrics {
        aod,
        eod: signed_eod.map(f64::abs),
        spd: signed_spd.map(f64::abs),
        di,
        signed_eod,
        signed_spd,
        acc: count(&|i| y[i] == p[i]) / n as f64,
        prec,
        rec,
        f1: if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) },
    }
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
        _ => false,
    }
}

/// Single feature `f` plus protected column `pa`.
fn two_column_dataset(f: &[f64], pa: &[u8], y: &[u8]) -> TabularDataset {
    let rows: Vec<[f64; 2]> = f.iter().zip(pa).map(|(&a, &b)| [a, f64::from(b)]).collect();
    let enc = Encoding {
        feature_names: vec!["f".into(), "pa".into()],
        protected: vec![("pa".into(), 1)],
        ..Encoding::default()
    };
    TabularDataset::from_parts("oracle".into(), Matrix::from_rows(&rows).unwrap(), y.to_vec(), enc).unwrap()
}

fn model(f: f64, pa: f64) -> u8 {
    u8::from(f > 0.5 || (pa == 1.0 && f > 0.3))
}

fn metric_oracle() -> Outcome {
    let mut rng = rng_from_seed(2024);
    let mut undefined_seen = 0;
    for case in 0..100 {
        let n = rng.random_range(1..=200);
        let (py, pp, ppa) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
        let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < py)).collect();
        let p: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < pp)).collect();
        let pa: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < ppa)).collect();
        let o = oracle(&y, &p, &pa);
        let gc = group_confusion(&y, &p, &pa).map_err(|e| e.to_string())?;
        let r = fairness_report(&gc, 0.0);
        let s = fairness_report_with(&gc, 0.0, MetricConvention::Signed);
        let perf = performance_report(&y, &p).map_err(|e| e.to_string())?;
        let ok = close(r.aod, o.aod)
            && close(r.eod, o.eod)
            && close(r.spd, o.spd)
            && close(r.di_deviation, o.di)
            && close(s.eod, o.signed_eod)
            && close(s.spd, o.signed_spd)
            && (perf.accuracy - o.acc).abs() <= 1e-12
            && (perf.precision - o.prec).abs() <= 1e-12
            && (perf.recall - o.rec).abs() <= 1e-12
            && (perf.f1 - o.f1).abs() <= 1e-12;
        check(ok, format!("case {case} (n={n}) disagrees with the recount"))?;
        undefined_seen += usize::from(o.aod.is_none());

        let f: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let ds = two_column_dataset(&f, &pa, &y);
        let fr = flip_rate(
            |d| Ok(d.x.iter_rows().map(|row| model(row[0], row[1])).collect()),
            &ds,
            "pa",
        )
        .map_err(|e| e.to_string())?;
        let flips = (0..n)
            .filter(|&i| model(f[i], f64::from(pa[i])) != model(f[i], f64::from(1 - pa[i])))
            .count();
        check(
            (fr - flips as f64 / n as f64).abs() <= 1e-12,
            format!("case {case}: flip rate {fr} vs recount"),
        )?;
    }
    Ok(format!(
        "100 random instances match the recount to 1e-12 ({undefined_seen} with undefined AOD)"
    ))
}

// 3 ------------------------------------------------------------------------

fn adult_csv() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("FAIRBENCH_ADULT_CSV") {
        return Some(PathBuf::from(p));
    }
    let default = workspace_root().join("data/adult.csv");
    default.is_file().then_some(default)
}

struct Comparison {
    spd: (f64, f64),
    eod: (f64, f64),
    acc: (f64, f64),
}

fn compare_rf_xfair(ds: &TabularDataset, protected: &str) -> Result<Comparison, String> {
    let mut cfg = trials_config(&[MethodKind::BaselineRf, MethodKind::XFair], 10);
    cfg.protected = vec![protected.to_string()];
    let recs = run_trials(ds, &cfg).map_err(|e| e.to_string())?;
    let m = |method: &str, f: fn(&RunRecord) -> Option<f64>| {
        medians(&recs, method, f).ok_or_else(|| format!("no defined {method} values"))
    };
    Ok(Comparison {
        spd: (m("baseline_rf", |r| r.fairness.spd)?, m("xfair", |r| r.fairness.spd)?),
        eod: (m("baseline_rf", |r| r.fairness.eod)?, m("xfair", |r| r.fairness.eod)?),
        acc: (
            m("baseline_rf", |r| Some(r.performance.accuracy))?,
            m("xfair", |r| Some(r.performance.accuracy))?,
        ),
    })
}

fn judge(label: &str, c: &Comparison) -> Result<String, String> {
    let text = format!(
        "{label}: SPD {:.3} -> {:.3}, EOD {:.3} -> {:.3}, accuracy {:.3} -> {:.3}",
        c.spd.0, c.spd.1, c.eod.0, c.eod.1, c.acc.0, c.acc.1
    );
    check(c.spd.1 <= c.spd.0, format!("{text}; SPD not reduced"))?;
    check(c.eod.1 <= c.eod.0, format!("{text}; EOD not reduced"))?;
    check((c.acc.0 - c.acc.1).abs() <= 0.03, format!("{text}; accuracy gap above 0.03"))?;
    Ok(text)
}

fn group_fairness() -> Outcome {
    let ds = synth(5000, 0.4, 0);
    let mut lines = vec![judge("synth", &compare_rf_xfair(&ds, SYNTH_PROTECTED)?)?];
    match adult_csv() {
        Some(csv) => {
            let mut manifest =
                load_manifest(workspace_root().join("manifests/adult.json")).map_err(|e| e.to_string())?;
            manifest.csv_path = csv.canonicalize().map_err(|e| e.to_string())?.display().to_string();
            let adult = ingest(&manifest, None).map_err(|e| e.to_string())?;
            lines.push(judge("adult/sex", &compare_rf_xfair(&adult, "sex")?)?);
        }
        None => lines.push("adult: SKIPPED (no CSV supplied)".into()),
    }
    Ok(lines.join("; "))
}

// 4 ------------------------------------------------------------------------

fn runtime_dominance() -> Outcome {
    let ds = synth(10_000, 0.5, 0);
    let pa = ds.protected(SYNTH_PROTECTED).map_err(|e| e.to_string())?;
    let c = fairbench::baselines::SubgroupCounts::of(&pa, &ds.y);
    let min = c.counts.iter().flatten().copied().min().unwrap_or(0);
    let skew = c.max() as f64 / min.max(1) as f64;
    check(skew >= 4.0, format!("subgroup skew {skew:.2} below 4"))?;

    let mut cfg = trials_config(&[MethodKind::FairSmote, MethodKind::XFair], 5);
    cfg.threads = Some(1);
    let recs = run_trials(&ds, &cfg).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for seed in 0..5u64 {
        let t = |m: &str| {
            recs.iter()
                .find(|r| r.seed == seed && r.method == m)
                .map(|r| r.wall_clock_seconds)
                .ok_or_else(|| format!("missing {m} seed {seed}"))
        };
        ratios.push(t("fair_smote")? / t("xfair")?);
    }
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    let text = format!("skew {skew:.1}:1, fair_smote/xfair per repeat [{}]", shown.join(", "));
    check(ratios.iter().all(|&r| r > 1.0), format!("{text}; a repeat is not > 1"))?;
    Ok(text)
}

// 5 ------------------------------------------------------------------------

fn scott_knott() -> Outcome {
    let mut rng = rng_from_seed(42);
    let treatments: Vec<TreatmentSamples> = [("a", 0.0), ("b", 0.02), ("c", 10.0)]
        .iter()
        .map(|&(name, mu)| {
            let d = Normal::new(mu, 1.0).unwrap();
            TreatmentSamples::new(name, (0..20).map(|_| d.sample(&mut rng)).collect())
        })
        .collect();
    let r = scott_knott_rank(&treatments, true).map_err(|e| e.to_string())?;
    let got: Vec<usize> = ["a", "b", "c"].iter().map(|n| r.rank(n).unwrap_or(0)).collect();
    check(got == [1, 1, 2], format!("(a) ranks {got:?}, expected [1, 1, 2]"))?;

    let same: Vec<TreatmentSamples> = (0..4)
        .map(|i| TreatmentSamples::new(format!("t{i}"), treatments[0].values.clone()))
        .collect();
    let r = scott_knott_rank(&same, true).map_err(|e| e.to_string())?;
    check(r.ranks.values().all(|&k| k == 1), "(b) identical treatments not all rank 1")?;

    let lo = [0.1, 0.5, 0.3];
    let hi = [1.0, 2.0, 1.5, 3.0];
    let d1 = cliffs_delta(&lo, &hi).map_err(|e| e.to_string())?;
    let d2 = cliffs_delta(&hi, &lo).map_err(|e| e.to_string())?;
    check(d1 == -1.0 && d2 == 1.0, format!("(c) deltas {d1}, {d2}"))?;

    let e = split_objective(&[1.0, 2.0, 9.0, 10.0], 2).map_err(|e| e.to_string())?;
    check(e == 16.0, format!("(d) objective {e}"))?;
    Ok("(a) ranks [1, 1, 2]; (b) all rank 1; (c) delta = -1 / +1; (d) E = 16".into())
}

// 6 ------------------------------------------------------------------------

fn smote_properties() -> Outcome {
    let ds = synth(3000, 0.4, 11);
    let minority: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.y[i] == 1).take(60).collect();
    let majority: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.y[i] == 0).take(1100).collect();
    let rows: Vec<usize> = minority.iter().chain(&majority).copied().collect();
    let sub = ds.select_rows(&rows);
    let layout = sub.layout();
    let cfg = SmoteConfig::new(5).with_layout(layout.clone());
    let (bx, by) = smote_balance(&sub.x, &sub.y, &cfg).map_err(|e| e.to_string())?;
    let ones = by.iter().filter(|&&l| l == 1).count();
    check(ones * 2 == by.len(), format!("{ones} of {} rows are class 1", by.len()))?;

    let parents: Vec<&[f64]> = (0..sub.n_rows())
        .filter(|&i| sub.y[i] == 1)
        .map(|i| sub.x.row(i))
        .collect();
    let num = &layout.numeric_columns;
    let synthetic: Vec<usize> = (sub.n_rows()..bx.nrows()).take(1000).collect();
    check(synthetic.len() == 1000, format!("only {} synthetic rows", synthetic.len()))?;
    for &r in &synthetic {
        let row = bx.row(r);
        let on_segment = |a: &[f64], b: &[f64]| {
            let j = *num
                .iter()
                .max_by(|&&i, &&k| (b[i] - a[i]).abs().total_cmp(&(b[k] - a[k]).abs()))
                .unwrap();
            let span = b[j] - a[j];
            let t = if span == 0.0 { 0.0 } else { (row[j] - a[j]) / span };
            (-1e-12..=1.0 + 1e-12).contains(&t)
                && num.iter().all(|&i| (a[i] + t * (b[i] - a[i]) - row[i]).abs() <= 1e-12)
        };
        let found = parents
            .iter()
            .enumerate()
            .any(|(i, a)| parents[i + 1..].iter().any(|b| on_segment(a, b)));
        check(found, format!("synthetic row {r} is not between two minority rows"))?;
        for g in &layout.onehot_groups {
            let ok = g.iter().all(|&c| row[c] == 0.0 || row[c] == 1.0)
                && g.iter().map(|&c| row[c]).sum::<f64>() == 1.0;
            check(ok, format!("synthetic row {r} has an invalid one-hot group"))?;
        }
    }
    Ok(format!(
        "{} rows balanced {ones}/{ones}; 1000 synthetic rows on minority segments; one-hot groups valid",
        by.len()
    ))
}

// 7 ------------------------------------------------------------------------

fn grouped(sizes: [usize; 4]) -> TabularDataset {
    let mut pa = Vec::new();
    let mut y = Vec::new();
    for (g, &(s, l)) in [(1u8, 1u8), (1, 0), (0, 1), (0, 0)].iter().enumerate() {
        pa.extend(std::iter::repeat_n(s, sizes[g]));
        y.extend(std::iter::repeat_n(l, sizes[g]));
    }
    let f: Vec<f64> = (0..y.len()).map(|i| i as f64 / y.len() as f64).collect();
    two_column_dataset(&f, &pa, &y)
}

fn reweighing() -> Outcome {
    let w = reweigh(&grouped([40, 20, 10, 30]), "pa").map_err(|e| e.to_string())?;
    let w = w.as_slice();
    let expected = [(0usize, 0.75), (40, 1.5), (60, 2.0), (70, 2.0 / 3.0)];
    for (row, e) in expected {
        check((w[row] - e).abs() <= 1e-9, format!("row {row}: weight {} vs {e}", w[row]))?;
    }
    let wi = reweigh(&grouped([30, 20, 15, 10]), "pa").map_err(|e| e.to_string())?;
    check(
        wi.as_slice().iter().all(|&v| (v - 1.0).abs() <= 1e-9),
        "independent PA and label do not give unit weights",
    )?;
    Ok("weights 0.75 / 1.5 / 2.0 / 0.6667; independent data gives 1.0".into())
}

// 8 ------------------------------------------------------------------------

fn without_wall_clock(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("synth.csv");
    let csv_s = csv.to_str().unwrap();
    run_cli(&["synth", "--rows", "800", "--bias", "0.4", "--seed", "3", "--out", csv_s])?;
    let manifest = dir.path().join("synth.json");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        run_cli(&[
            "run",
            "--manifest",
            manifest.to_str().unwrap(),
            "--protected",
            SYNTH_PROTECTED,
            "--methods",
            "baseline_rf,random,reweighing,fair_smote,xfair",
            "--repeats",
            "3",
            "--seed",
            "11",
            "--classifier",
            "rf",
            "--extrapolation",
            "cart",
            "--budget",
            "5",
            "--out",
            out.to_str().unwrap(),
        ])?;
        outputs.push(std::fs::read_to_string(out.join("results.csv")).map_err(|e| e.to_string())?);
    }
    check(
        outputs[0].lines().next() == outputs[1].lines().next()
            && outputs[0].lines().next().is_some_and(|h| h.ends_with(",wall_clock_seconds")),
        "unexpected header",
    )?;
    let (a, b) = (without_wall_clock(&outputs[0]), without_wall_clock(&outputs[1]));
    check(a.len() == 16, format!("expected 15 records, got {}", a.len() - 1))?;
    check(a == b, "results differ between runs")?;
    Ok("two CLI runs give identical results.csv apart from wall_clock_seconds (15 records)".into())
}

// 9 ------------------------------------------------------------------------

fn explanation_surface() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("synth.csv");
    run_cli(&["synth", "--rows", "2000", "--bias", "0.4", "--seed", "5", "--out", csv.to_str().unwrap()])?;
    let manifest = dir.path().join("synth.json");
    let mut found = Vec::new();
    for kind in ["lr", "cart"] {
        let text = run_cli(&[
            "explain",
            "--manifest",
            manifest.to_str().unwrap(),
            "--protected",
            SYNTH_PROTECTED,
            "--extrapolation",
            kind,
            "--seed",
            "0",
        ])?;
        check(text.lines().count() > 1, format!("{kind}: empty explanation"))?;
        let json = run_cli(&[
            "explain",
            "--manifest",
            manifest.to_str().unwrap(),
            "--protected",
            SYNTH_PROTECTED,
            "--extrapolation",
            kind,
            "--seed",
            "0",
            "--format",
            "json",
        ])?;
        let v: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        let entries = v["entries"].as_array().ok_or("no entries")?;
        check(!entries.is_empty(), format!("{kind}: no entries"))?;
        let hit = entries.iter().take(3).find_map(|e| {
            e["features"].as_array()?.iter().find_map(|f| {
                let base = f.as_str()?.split('=').next()?;
                SYNTH_PA_CORRELATED.contains(&base).then(|| base.to_string())
            })
        });
        match hit {
            Some(feature) => found.push(format!("{kind}: {feature}")),
            None => return Err(format!("{kind}: no PA-correlated feature in the top 3 entries")),
        }
    }
    Ok(format!("top-3 entries name a planted proxy ({})", found.join(", ")))
}

/// (name, check, time limit in seconds)
type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 9] = [
        ("flip rate is zero by construction", flip_rate_zero, 60),
        ("metric oracle equivalence", metric_oracle, 30),
        ("group fairness improves at desk scale", group_fairness, 600),
        ("runtime dominance over Fair-SMOTE", runtime_dominance, 300),
        ("Scott-Knott correctness", scott_knott, 30),
        ("SMOTE properties", smote_properties, 30),
        ("Reweighing formula", reweighing, 30),
        ("CLI determinism", determinism, 300),
        ("explanation surface", explanation_surface, 60),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("{detail}; took longer than {limit}s"))
            }
            other => other,
        };
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(outcome.is_err());
        println!(
            "{status} criterion {}: {name} ({:.1}s) {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
