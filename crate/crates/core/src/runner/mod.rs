//! Experiment orchestration: configuration, the seeded experiment grid,
//! statistical comparison of reports and threshold curves, plus the CSV
//! files each of them produces.

mod compare;
mod config;
mod curves;
mod experiment;
mod output;

pub use compare::{compare, write_friedman_csv, write_pairwise_csv, CompareOptions, Comparison, FriedmanSummary, PairwiseRow};
pub use config::{parse_overrides, DatasetSource, ExperimentConfig};
pub use curves::{emit_threshold_curves, CurvePeak, CurvePoint, Curves};
pub use experiment::{injection_seed, run_experiment, ExperimentOutput, RunRecord, RunStatus, ThresholdOutcome};
pub use output::{read_reports, write_curves_csv, write_experiment, write_runs_csv};
