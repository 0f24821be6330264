use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fairbench::harness::{
    export_fig_data, read_results, run_experiment, summarize, write_outputs, ExperimentConfig,
    MethodKind,
};
use fairbench::learners::LearnerKind;
use fairbench::tabular::{ingest, load_manifest, split, write_synth, SynthSpec};
use fairbench::xfair::{build_ensemble, XFairConfig, XFairPipeline, DEFAULT_BUDGET};

#[derive(Parser)]
#[command(name = "fairbench", version, about = "Bias mitigation by protected-attribute extrapolation, with baselines and a repeated-trial benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated seeded trials and write results.csv, summary.csv and summary.txt.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Protected attributes (default: all in the manifest).
        #[arg(long, value_delimiter = ',')]
        protected: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "baseline_rf,random,reweighing,fair_smote,xfair")]
        methods: Vec<MethodKind>,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "rf")]
        classifier: LearnerKind,
        #[arg(long, default_value = "cart")]
        extrapolation: LearnerKind,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-rank an existing results.csv.
    Rank {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print what the extrapolation model learned about a protected attribute.
    Explain {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        protected: String,
        #[arg(long, default_value = "cart")]
        extrapolation: LearnerKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Write relabel-ratio data (favorable/unfavorable by all/flipped rows) as CSV.
    Figdata {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        protected: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "rf")]
        classifier: LearnerKind,
        #[arg(long, default_value = "cart")]
        extrapolation: LearnerKind,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Generate a biased synthetic dataset; the manifest is written next to the CSV.
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        bias: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV path; the manifest gets the same stem with a .json extension.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            manifest,
            protected,
            methods,
            repeats,
            seed,
            classifier,
            extrapolation,
            budget,
            out,
        } => {
            let cfg = ExperimentConfig {
                protected,
                methods,
                repeats,
                base_seed: seed,
                classifier,
                extrapolation,
                budget,
                ..ExperimentConfig::new(manifest, out.clone())
            };
            let records = run_experiment(&cfg)?;
            write_outputs(&records, &out)
                .with_context(|| format!("writing results to {}", out.display()))?;
            if repeats >= 2 {
                print!("{}", summarize(&records)?.render_text());
            }
            eprintln!("{} records written to {}", records.len(), out.join("results.csv").display());
        }
        Command::Rank { results, out } => {
            let records = read_results(&results)?;
            let summary = summarize(&records)?;
            summary.write_to_dir(&out)?;
            print!("{}", summary.render_text());
        }
        Command::Explain {
            manifest,
            protected,
            extrapolation,
            seed,
            budget,
            format,
        } => {
            let ds = ingest(&load_manifest(&manifest)?, None)?;
            let ens = build_ensemble(&ds, &protected, extrapolation, budget, seed)?;
            let explanation = ens.explain_bias()?;
            match format {
                Format::Text => print!("{explanation}"),
                Format::Json => println!("{}", serde_json::to_string_pretty(&explanation)?),
            }
        }
        Command::Figdata {
            manifest,
            protected,
            seed,
            out,
            classifier,
            extrapolation,
            budget,
        } => {
            if !matches!(extrapolation, LearnerKind::Cart | LearnerKind::LogisticRegression) {
                bail!("--extrapolation must be cart or lr");
            }
            let ds = ingest(&load_manifest(&manifest)?, None)?;
            let s = split(&ds, seed)?;
            let mut cfg = XFairConfig {
                classifier,
                ..XFairConfig::default()
            };
            cfg.ensemble.model_kind = extrapolation;
            cfg.ensemble.budget = budget;
            let pipeline = XFairPipeline::build(&s.train, std::slice::from_ref(&protected), &cfg, seed)?;
            let rows = export_fig_data(&pipeline, &s.test, &protected, &out)?;
            for r in rows {
                let v = r.value.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
                println!("{:<12} {:<8} {v}", r.ratio_kind, r.scope);
            }
        }
        Command::Synth {
            rows,
            bias,
            seed,
            out,
        } => {
            let manifest = write_synth(
                &SynthSpec {
                    rows,
                    bias_strength: bias,
                    seed,
                },
                &out,
            )?;
            println!("{}", out.display());
            println!("{}", manifest.display());
        }
    }
    Ok(())
}
