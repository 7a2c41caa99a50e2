use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use labelnoise::classifiers::Pool;
use labelnoise::data::{self, Dataset, LoadOptions, SyntheticParams};
use labelnoise::detection::{self, flag, ThresholdSpec};
use labelnoise::evaluation::{score, Scores};
use labelnoise::noise::{self, InjectionLedger, NoiseModel};
use labelnoise::runner::{self, CompareOptions, ExperimentConfig};
use labelnoise::{Error, Result};

/// Label-noise injection, ensemble detection and evaluation.
#[derive(Parser)]
#[command(name = "labelnoise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a two-Gaussian synthetic dataset.
    Synth {
        #[arg(long)]
        positives: usize,
        #[arg(long)]
        negatives: usize,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long)]
        separation: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove instances misclassified by every pool member (k-fold).
    Clean {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Cleaned dataset.
        #[arg(long)]
        out: PathBuf,
        /// CSV of removed ids.
        #[arg(long)]
        removed: Option<PathBuf>,
    },
    /// Flip labels under an NCAR or NAR noise model.
    Inject {
        #[command(flatten)]
        input: InputArgs,
        /// Noise level in [0, 1].
        #[arg(long)]
        p: f64,
        /// `NCAR`, `NAR(9:1)`, `1:9`, ...
        #[arg(long, default_value = "NCAR")]
        model: NoiseModel,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
    },
    /// Fit the pool on a training set and flag suspicious test labels.
    Detect {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "label")]
        label_col: String,
        #[arg(long)]
        positive_label: Option<String>,
        /// Repeatable: an integer count, `majority`, `consensus` or `30%`.
        #[arg(long = "threshold", default_value = "majority")]
        thresholds: Vec<ThresholdSpec>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Ledger CSV from `inject`; when given, scores are printed.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a configured experiment grid.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Override any config field: `--set repetitions=20`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Friedman and pairwise Wilcoxon tests over report files.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Threshold count to compare at (default: majority vote).
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// F-score against vote threshold per report cell.
    Curves {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        peaks: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_col: String,
    #[arg(long)]
    positive_label: Option<String>,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset> {
        load(&self.input, &self.label_col, self.positive_label.clone())
    }
}

fn load(path: &Path, label_col: &str, positive_label: Option<String>) -> Result<Dataset> {
    let options = LoadOptions {
        positive_label,
        ..LoadOptions::default().with_label_column(label_col)
    };
    let loaded = data::load_csv(path, &options)?;
    if loaded.dropped > 0 {
        eprintln!("{}: dropped {} malformed rows", path.display(), loaded.dropped);
    }
    Ok(loaded.dataset)
}

fn load_pool(path: Option<&Path>) -> Result<Pool> {
    #[derive(Deserialize)]
    struct PoolFile {
        pool: Pool,
    }
    let Some(path) = path else {
        return Ok(Pool::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PoolFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(file.pool)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Rebuilds a ledger from its CSV: the observed labels come from `noisy`,
/// originals are recovered by undoing the recorded flips.
fn read_ledger(path: &Path, noisy: &Dataset) -> Result<InjectionLedger> {
    #[derive(Deserialize)]
    struct Row {
        id: u64,
        flipped: u8,
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut flipped = BTreeSet::new();
    for row in csv::Reader::from_reader(file).deserialize::<Row>() {
        let row = row?;
        if row.flipped != 0 {
            flipped.insert(row.id);
        }
    }
    let original = noisy.map_labels(|i| if flipped.contains(&i.id) { i.label.flipped() } else { i.label });
    InjectionLedger::between(&original, noisy)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Synth {
            positives,
            negatives,
            dims,
            separation,
            seed,
            out,
        } => {
            let params = SyntheticParams {
                positives,
                negatives,
                dims,
                separation,
            };
            let d = data::generate_synthetic(&params, seed)?;
            data::write_csv(&d, &out)?;
            Ok(json!({ "instances": d.len(), "out": out }))
        }
        Command::Clean {
            input,
            folds,
            seed,
            pool,
            out,
            removed,
        } => {
            let d = input.load()?;
            let c = detection::clean_consensus(&d, &load_pool(pool.as_deref())?, folds, seed)?;
            data::write_csv(&c.cleaned, &out)?;
            if let Some(path) = &removed {
                let mut w = csv::Writer::from_writer(create(path)?);
                w.write_record(["id"])?;
                for id in &c.removed {
                    w.write_record([id.to_string()])?;
                }
                w.flush().map_err(|e| Error::io(path, e))?;
            }
            Ok(json!({ "input": d.len(), "removed": c.removed, "kept": c.cleaned.len() }))
        }
        Command::Inject {
            input,
            p,
            model,
            seed,
            out,
            ledger,
        } => {
            let d = input.load()?;
            let plan = noise::plan_noise(&d, p, model)?;
            let (noisy, record) = noise::inject(&d, &plan, seed)?;
            data::write_csv(&noisy, &out)?;
            record.write_csv_to(d.schema(), create(&ledger)?)?;
            Ok(json!({
                "minority_flips": plan.n_minority,
                "majority_flips": plan.n_majority,
                "minority_label": d.schema().label_value(plan.minority),
            }))
        }
        Command::Detect {
            train,
            test,
            label_col,
            positive_label,
            thresholds,
            seed,
            pool,
            ledger,
            beta,
            out,
        } => {
            let train = load(&train, &label_col, positive_label.clone())?;
            let test = load(&test, &label_col, positive_label)?;
            let pool = load_pool(pool.as_deref())?;
            let votes = detection::build_votes(&pool, &train, &test, seed)?;
            let ledger = ledger.map(|path| read_ledger(&path, &test)).transpose()?;
            let mut w = create(&out)?;
            let mut summary = Vec::new();
            for (i, spec) in thresholds.iter().enumerate() {
                let result = flag(&votes, spec.resolve(pool.len())?)?;
                // One header for the whole file.
                let mut buf = Vec::new();
                result.write_csv_to(&mut buf)?;
                let body = if i == 0 {
                    &buf[..]
                } else {
                    &buf[buf.iter().position(|&b| b == b'\n').map_or(0, |n| n + 1)..]
                };
                std::io::Write::write_all(&mut w, body).map_err(|e| Error::io(&out, e))?;
                let mut entry = json!({ "threshold_t": result.threshold.t(), "flagged": result.flagged.len() });
                if let Some(ledger) = &ledger {
                    let s = Scores::from_counts(&score(&result, ledger)?, beta);
                    entry["precision"] = json!(s.precision);
                    entry["recall"] = json!(s.recall);
                    entry["fscore"] = json!(s.fscore);
                }
                summary.push(entry);
            }
            std::io::Write::flush(&mut w).map_err(|e| Error::io(&out, e))?;
            Ok(json!({ "pool_size": pool.len(), "thresholds": summary }))
        }
        Command::Experiment {
            config,
            seed,
            overrides,
            repetitions,
            output_dir,
        } => {
            let mut pairs = runner::parse_overrides(&overrides)?;
            pairs.push(("seed".into(), seed.to_string()));
            if let Some(r) = repetitions {
                pairs.push(("repetitions".into(), r.to_string()));
            }
            let cfg = ExperimentConfig::load(&config, &pairs)?;
            let base = config.parent().filter(|p| !p.as_os_str().is_empty());
            let dir = output_dir
                .or_else(|| cfg.output_dir.clone().map(|d| base.map_or(d.clone(), |b| b.join(d))))
                .unwrap_or_else(|| PathBuf::from("results").join(&cfg.name));
            let out = runner::run_experiment(&cfg, base)?;
            let written = runner::write_experiment(&out, &dir)?;
            let infeasible: Vec<String> = out
                .infeasible_cells()
                .iter()
                .map(|(ir, p, m)| format!("{ir} p={p} {m}"))
                .collect();
            Ok(json!({
                "report_rows": out.reports.len(),
                "infeasible_cells": infeasible,
                "removed_by_cleaning": out.cleaned_away.len(),
                "files": written,
            }))
        }
        Command::Compare {
            reports,
            alpha,
            threshold,
            out_dir,
        } => {
            let rows = runner::read_reports(&reports)?;
            let cmp = runner::compare(
                &rows,
                CompareOptions {
                    alpha,
                    threshold_t: threshold,
                },
            )?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            runner::write_friedman_csv(cmp.friedman.as_ref(), create(&out_dir.join("friedman.csv"))?)?;
            runner::write_pairwise_csv(&cmp.pairwise, create(&out_dir.join("wilcoxon.csv"))?)?;
            Ok(json!({
                "friedman_p": cmp.friedman.as_ref().map(|f| f.result.p_value),
                "pairwise_cells": cmp.pairwise.len(),
                "out_dir": out_dir,
            }))
        }
        Command::Curves { reports, out, peaks } => {
            let rows = runner::read_reports(&reports)?;
            let curves = runner::emit_threshold_curves(&rows)?;
            let peaks_path = peaks.unwrap_or_else(|| out.with_file_name("curve_peaks.csv"));
            runner::write_curves_csv(&curves, create(&out)?, create(&peaks_path)?)?;
            let best: Vec<_> = curves
                .peaks
                .iter()
                .map(|p| json!({ "cell": format!("{} {} {} p={}", p.dataset, p.ir, p.model_label(), p.p), "best_t": p.best_t }))
                .collect();
            Ok(json!({ "cells": best }))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
