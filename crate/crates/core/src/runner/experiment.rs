use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::curves::{emit_threshold_curves, Curves};
use crate::data::{self, ImbalanceRatio};
use crate::detection::{self, flag, Threshold};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, score, ConfusionCounts, EvalKey, EvalReport, ReportRow, Scores};
use crate::noise::{inject, plan_noise, NoiseModel};
use crate::seed;

/// Scores of one repetition at one threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdOutcome {
    pub threshold: Threshold,
    pub counts: ConfusionCounts,
    pub scores: Scores,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Scored(Vec<ThresholdOutcome>),
    /// The noise plan could not be met by the test set.
    Infeasible(String),
}

/// One (IR, p, model, repetition) execution.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub ir: ImbalanceRatio,
    pub p: f64,
    pub model: NoiseModel,
    pub repetition: usize,
    /// Seed of the noise injection.
    pub seed: u64,
    pub test_size: usize,
    pub status: RunStatus,
}

/// Everything an experiment produces, in deterministic grid order.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub dataset: String,
    /// Ids removed by consensus cleaning (empty when disabled).
    pub cleaned_away: Vec<u64>,
    pub reports: Vec<EvalReport>,
    pub runs: Vec<RunRecord>,
    /// Present when every threshold `1..=N` was scored.
    pub curves: Option<Curves>,
}

impl ExperimentOutput {
    pub fn report_rows(&self) -> Vec<ReportRow> {
        self.reports.iter().map(ReportRow::from).collect()
    }

    /// Cells `(ir, p, model)` with no feasible repetition.
    pub fn infeasible_cells(&self) -> Vec<(ImbalanceRatio, f64, NoiseModel)> {
        let mut cells: Vec<_> = Vec::new();
        for r in &self.runs {
            let key = (r.ir, r.p, r.model);
            if matches!(r.status, RunStatus::Infeasible(_)) && !cells.contains(&key) {
                cells.push(key);
            }
        }
        cells
    }
}

fn ir_code(ir: ImbalanceRatio) -> u64 {
    u64::from(ir.minority()) << 32 | u64::from(ir.majority())
}

fn model_code(model: NoiseModel) -> u64 {
    match model {
        NoiseModel::Ncar => 0,
        NoiseModel::Nar(r) => 1 << 63 | u64::from(r.minority()) << 31 | u64::from(r.majority()),
    }
}

/// Stage tags keep the seeds of different pipeline steps apart.
const STAGE_CLEAN: u64 = 1;
const STAGE_UNIT: u64 = 2;
const STAGE_NOISE: u64 = 3;

/// Seed of the noise injection for one cell and repetition.
pub fn injection_seed(master: u64, dataset: &str, ir: ImbalanceRatio, p: f64, model: NoiseModel, rep: usize) -> u64 {
    seed::derive(
        master,
        &[STAGE_NOISE, seed::name_hash(dataset), ir_code(ir), p.to_bits(), model_code(model), rep as u64],
    )
}

/// Runs the full grid: clean → undersample → split → fit pool → inject →
/// vote → flag → score, for every IR, noise level, noise model and
/// repetition.
///
/// The undersample, split and fitted pool of a repetition depend only on
/// `(master seed, dataset, IR, repetition)`, so every noise level and model
/// in that repetition is evaluated on the same split with the same trained
/// pool; only the injection differs. Relative CSV paths resolve against
/// `base_dir`.
pub fn run_experiment(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<ExperimentOutput> {
    config.validate()?;
    let master = config.master_seed()?;
    let name = config.dataset.name();
    let dhash = seed::name_hash(&name);
    let pool = config.pool();
    let thresholds = config.resolved_thresholds()?;

    let mut base = config.dataset.load(master, base_dir)?;
    let mut cleaned_away = Vec::new();
    if config.cleaning_enabled() {
        let c = detection::clean_consensus(
            &base,
            &pool,
            config.cleaning_folds,
            seed::derive(master, &[STAGE_CLEAN, dhash]),
        )?;
        cleaned_away = c.removed.into_iter().collect();
        base = c.cleaned;
    }

    let units: Vec<(ImbalanceRatio, usize)> = config
        .irs
        .iter()
        .flat_map(|&ir| (0..config.repetitions).map(move |r| (ir, r)))
        .collect();
    let run_unit = |&(ir, rep): &(ImbalanceRatio, usize)| -> Result<Vec<RunRecord>> {
        let split_rep = if config.resplit_per_repetition { rep as u64 } else { 0 };
        let unit = seed::derive(master, &[STAGE_UNIT, dhash, ir_code(ir), split_rep]);
        let sampled = data::undersample_to_ir(&base, ir, seed::derive(unit, &[1]))?;
        let pair = data::split(&sampled, config.train_fraction, seed::derive(unit, &[2]))?;
        let fit_seed = seed::derive(unit, &[3]);
        // With clean training data one fitted pool serves every cell.
        let shared = if config.inject_train {
            None
        } else {
            Some(detection::predict_pool(&pool, &pair.train, &pair.test, fit_seed)?)
        };
        let mut records = Vec::new();
        for &p in &config.noise_levels {
            for &model in &config.noise_models {
                let seed = injection_seed(master, &name, ir, p, model, rep);
                let record = |status| RunRecord {
                    dataset: name.clone(),
                    ir,
                    p,
                    model,
                    repetition: rep,
                    seed,
                    test_size: pair.test.len(),
                    status,
                };
                let plans = plan_noise(&pair.test, p, model).and_then(|test_plan| {
                    let train_plan = if config.inject_train {
                        Some(plan_noise(&pair.train, p, model)?)
                    } else {
                        None
                    };
                    Ok((test_plan, train_plan))
                });
                let (plan, train_plan) = match plans {
                    Ok(plans) => plans,
                    Err(e @ Error::InfeasiblePlan { .. }) => {
                        records.push(record(RunStatus::Infeasible(e.to_string())));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let (noisy, ledger) = inject(&pair.test, &plan, seed)?;
                let votes = match (&shared, train_plan) {
                    (Some(preds), _) => preds.tally(&noisy)?,
                    (None, Some(tp)) => {
                        let (noisy_train, _) = inject(&pair.train, &tp, seed::derive(seed, &[1]))?;
                        detection::predict_pool(&pool, &noisy_train, &pair.test, fit_seed)?.tally(&noisy)?
                    }
                    (None, None) => unreachable!("train plan exists whenever predictions are not shared"),
                };
                let outcomes = thresholds
                    .iter()
                    .map(|&t| {
                        let result = flag(&votes, t)?;
                        let counts = score(&result, &ledger)?;
                        Ok(ThresholdOutcome {
                            threshold: t,
                            scores: Scores::from_counts(&counts, config.beta),
                            counts,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                records.push(record(RunStatus::Scored(outcomes)));
            }
        }
        Ok(records)
    };
    // Units are independent; collecting an indexed parallel iterator keeps
    // input order, so the merged log does not depend on scheduling.
    let per_unit: Vec<Result<Vec<RunRecord>>> = units.par_iter().map(run_unit).collect();
    let mut runs = Vec::new();
    for r in per_unit {
        runs.extend(r?);
    }
    // Log order: IR, p, model, repetition.
    let position = |r: &RunRecord| {
        let ir = config.irs.iter().position(|&x| x == r.ir).unwrap_or(0);
        let p = config.noise_levels.iter().position(|&x| x == r.p).unwrap_or(0);
        let m = config.noise_models.iter().position(|&x| x == r.model).unwrap_or(0);
        (ir, p, m, r.repetition)
    };
    runs.sort_by_key(position);

    let mut reports = Vec::new();
    for &ir in &config.irs {
        for &p in &config.noise_levels {
            for &model in &config.noise_models {
                let cell: Vec<&Vec<ThresholdOutcome>> = runs
                    .iter()
                    .filter(|r| r.ir == ir && r.p == p && r.model == model)
                    .filter_map(|r| match &r.status {
                        RunStatus::Scored(o) => Some(o),
                        RunStatus::Infeasible(_) => None,
                    })
                    .collect();
                if cell.is_empty() {
                    continue;
                }
                for (j, &t) in thresholds.iter().enumerate() {
                    let key = EvalKey {
                        dataset: name.clone(),
                        ir,
                        model,
                        p,
                        threshold_t: t.t(),
                        pool_size: pool.len(),
                    };
                    let scores: Vec<(EvalKey, Scores)> = cell.iter().map(|o| (key.clone(), o[j].scores)).collect();
                    reports.push(aggregate(&scores)?);
                }
            }
        }
    }

    let full_grid = thresholds.len() == pool.len();
    let curves = if full_grid && !reports.is_empty() {
        let rows: Vec<ReportRow> = reports.iter().map(ReportRow::from).collect();
        Some(emit_threshold_curves(&rows)?)
    } else {
        None
    };
    Ok(ExperimentOutput {
        dataset: name,
        cleaned_away,
        reports,
        runs,
        curves,
    })
}
