use labelnoise::runner::{run_experiment, ExperimentConfig, RunStatus};
use labelnoise::Error;

fn config(extra: &str, positives: usize, negatives: usize) -> ExperimentConfig {
    let text = format!(
        r#"
seed = 3
repetitions = 2
{extra}

[dataset]
kind = "synthetic"
positives = {positives}
negatives = {negatives}
dims = 2
separation = 2.5
"#
    );
    ExperimentConfig::from_toml(&text, &[]).unwrap()
}

#[test]
fn full_grid_reports_every_cell_and_threshold() {
    let cfg = config(
        r#"irs = ["50:50", "30:70", "20:80"]
noise_levels = [0.05, 0.1, 0.15, 0.2]
noise_models = ["NCAR", "NAR(9:1)", "NAR(1:9)"]"#,
        300,
        300,
    );
    let out = run_experiment(&cfg, None).unwrap();
    // 3 IRs x 4 levels x 3 models, 10 thresholds each.
    assert_eq!(out.reports.len(), 36 * 10);
    assert_eq!(out.runs.len(), 36 * 2);
    assert!(out.infeasible_cells().is_empty());
    assert!(out.reports.iter().all(|r| r.repetitions.len() == 2));
    let curves = out.curves.unwrap();
    assert_eq!(curves.peaks.len(), 36);
    assert_eq!(curves.points.len(), 360);
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let grid = r#"irs = ["20:80"]
noise_levels = [0.1]
noise_models = ["NCAR", "NAR(9:1)"]"#;
    let a = run_experiment(&config(grid, 150, 150), None).unwrap();
    let b = run_experiment(&config(grid, 150, 150), None).unwrap();
    assert_eq!(a.report_rows(), b.report_rows());
    assert_eq!(a.runs, b.runs);

    let mut other = config(grid, 150, 150);
    other.seed = Some(4);
    let c = run_experiment(&other, None).unwrap();
    assert_ne!(a.runs, c.runs);
}

#[test]
fn infeasible_cells_are_recorded_not_fatal() {
    // A 20:80 test set of 30 instances has 6 minority instances; p = 0.4
    // under NAR(9:1) needs 11 minority flips.
    let cfg = config(
        r#"irs = ["20:80"]
noise_levels = [0.05, 0.4]
noise_models = ["NCAR", "NAR(9:1)"]
thresholds = ["majority"]"#,
        25,
        100,
    );
    let out = run_experiment(&cfg, None).unwrap();
    let infeasible = out.infeasible_cells();
    assert_eq!(infeasible.len(), 1);
    assert_eq!(infeasible[0].1, 0.4);
    assert_eq!(infeasible[0].2.to_string(), "NAR(9:1)");
    let bad = out.runs.iter().find(|r| matches!(r.status, RunStatus::Infeasible(_))).unwrap();
    match &bad.status {
        RunStatus::Infeasible(msg) => assert!(msg.contains("maximal feasible p"), "{msg}"),
        _ => unreachable!(),
    }
    // The other three cells are still reported.
    assert_eq!(out.reports.len(), 3);
    assert!(out.curves.is_none());
}

#[test]
fn fixed_split_reuses_the_same_test_set() {
    let mut cfg = config(
        r#"irs = ["50:50"]
noise_levels = [0.1]
noise_models = ["NCAR"]
resplit_per_repetition = false"#,
        100,
        100,
    );
    cfg.repetitions = 4;
    let out = run_experiment(&cfg, None).unwrap();
    let sizes: Vec<usize> = out.runs.iter().map(|r| r.test_size).collect();
    assert_eq!(sizes, vec![60; 4]);
    let seeds: std::collections::BTreeSet<u64> = out.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 4, "each repetition still draws its own noise");
}

#[test]
fn missing_seed_is_a_config_error() {
    let mut cfg = config("irs = [\"50:50\"]\nnoise_levels = [0.1]\nnoise_models = [\"NCAR\"]", 50, 50);
    cfg.seed = None;
    assert!(matches!(run_experiment(&cfg, None), Err(Error::Config(_))));
}
