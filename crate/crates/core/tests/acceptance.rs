// End-to-end acceptance checks. Runs with a plain `main` so that every check
// reports a PASS/FAIL line, even after an earlier one fails; the process exits
// non-zero if any check fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use labelnoise::data::{self, Dataset, SyntheticParams};
use labelnoise::detection::{flag, Threshold, VoteMatrix};
use labelnoise::evaluation::{f_score, precision_recall, ReportRow};
use labelnoise::noise::plan_noise;
use labelnoise::runner::{run_experiment, ExperimentConfig, ExperimentOutput};
use labelnoise::stats::{friedman, wilcoxon_signed_rank, ScoreTable};

/// Master seed used for the qualitative synthetic checks, fixed up front.
const MASTER_SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn synthetic(positives: usize, negatives: usize, separation: f64, seed: u64) -> Dataset {
    data::generate_synthetic(&SyntheticParams { positives, negatives, dims: 2, separation }, seed).unwrap()
}

fn noise_plan_exactness() -> Outcome {
    let test = synthetic(500, 500, 2.0, 1);
    let mut got = Vec::new();
    for (model, want) in [("NCAR", (50, 50)), ("NAR(9:1)", (90, 10)), ("NAR(1:9)", (10, 90))] {
        let plan = plan_noise(&test, 0.10, model.parse().unwrap()).unwrap();
        got.push(format!("{model}=({},{})", plan.n_minority, plan.n_majority));
        if (plan.n_minority, plan.n_majority) != want {
            return check(false, got.join(" "));
        }
    }
    check(true, got.join(" "))
}

fn threshold_monotonicity() -> Outcome {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..1000 {
        let rows = rng.random_range(0..200);
        let votes = VoteMatrix::from_counts(n, (0..rows).map(|id| (id as u64, rng.random_range(0..=n)))).unwrap();
        let flagged: Vec<BTreeSet<u64>> = Threshold::all(n).map(|t| flag(&votes, t).unwrap().flagged).collect();
        violations += flagged.windows(2).filter(|w| !w[1].is_subset(&w[0])).count();
    }
    check(violations == 0, format!("1000 matrices, {violations} violations"))
}

fn synthetic_grid() -> ExperimentOutput {
    let text = format!(
        r#"
name = "acceptance"
seed = {MASTER_SEED}
repetitions = 30
irs = ["20:80", "50:50"]
noise_levels = [0.15]
noise_models = ["NCAR", "NAR(9:1)", "NAR(1:9)"]

[dataset]
kind = "synthetic"
positives = 600
negatives = 600
dims = 2
separation = 2.5
"#
    );
    run_experiment(&ExperimentConfig::from_toml(&text, &[]).unwrap(), None).unwrap()
}

fn mean_f(rows: &[ReportRow], ir: &str, model: &str, t: usize) -> f64 {
    rows.iter()
        .find(|r| r.ir.to_string() == ir && r.model_label() == model && r.threshold_t == t)
        .unwrap_or_else(|| panic!("no report row for {ir} {model} t={t}"))
        .fscore_mean
}

fn imbalanced_noise_ratio(out: &ExperimentOutput) -> Outcome {
    let rows = out.report_rows();
    let majority = Threshold::majority(10).t();
    let (low, high) = (mean_f(&rows, "20:80", "NAR(9:1)", majority), mean_f(&rows, "20:80", "NAR(1:9)", majority));
    let gap = high - low;
    check(gap >= 0.05, format!("F(NAR 1:9)={high:.4} F(NAR 9:1)={low:.4} gap={gap:.4} (need >= 0.05)"))
}

fn balanced_noise_ratio(out: &ExperimentOutput) -> Outcome {
    let rows = out.report_rows();
    let t = Threshold::majority(10).t();
    let ncar = mean_f(&rows, "50:50", "NCAR", t);
    let d9 = (ncar - mean_f(&rows, "50:50", "NAR(9:1)", t)).abs();
    let d19 = (ncar - mean_f(&rows, "50:50", "NAR(1:9)", t)).abs();
    check(d9 <= 0.05 && d19 <= 0.05, format!("|NCAR-NAR(9:1)|={d9:.4} |NCAR-NAR(1:9)|={d19:.4} (need <= 0.05)"))
}

fn threshold_shift(out: &ExperimentOutput) -> Outcome {
    let curves = out.curves.as_ref().expect("full threshold grid");
    let best = |model: &str| {
        curves
            .peaks
            .iter()
            .find(|pk| pk.ir.to_string() == "20:80" && pk.model_label() == model)
            .expect("peak")
            .best_t
    };
    let (a, b, c) = (best("NAR(9:1)"), best("NCAR"), best("NAR(1:9)"));
    check(a <= b && b <= c, format!("argmax t: NAR(9:1)={a} NCAR={b} NAR(1:9)={c}"))
}

/// Two-sided p-value by enumerating every sign assignment of the ranks.
fn enumerated_p(d: &[f64]) -> f64 {
    let m = d.len();
    let mut abs: Vec<(f64, usize)> = d.iter().map(|v| v.abs()).zip(0..).collect();
    abs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut rank = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && abs[j + 1].0 == abs[i].0 {
            j += 1;
        }
        for k in i..=j {
            rank[abs[k].1] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    let w_plus: f64 = (0..m).filter(|&k| d[k] > 0.0).map(|k| rank[k]).sum();
    let total: f64 = rank.iter().sum();
    let stat = w_plus.min(total - w_plus);
    let mut at_most = 0u64;
    for mask in 0u32..(1 << m) {
        let w: f64 = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| rank[k]).sum();
        if w <= stat {
            at_most += 1;
        }
    }
    (2.0 * at_most as f64 / (1u64 << m) as f64).min(1.0)
}

fn wilcoxon_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let levels = [-3.0, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 3.0];
    let mut mismatches = 0;
    let mut cases = 0;
    for m in 1..=12 {
        for _ in 0..40 {
            let d: Vec<f64> = (0..m).map(|_| levels[rng.random_range(0..levels.len())]).collect();
            let got = wilcoxon_signed_rank(&d, &vec![0.0; m], 0.05).unwrap().p_value;
            cases += 1;
            if got != enumerated_p(&d) {
                mismatches += 1;
            }
        }
    }
    let five = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5], 0.05).unwrap().p_value;
    check(
        mismatches == 0 && five == 0.0625,
        format!("{cases} cases, {mismatches} mismatches; {{+1..+5}} p={five}"),
    )
}

fn friedman_exactness() -> Outcome {
    let values = vec![vec![0.9, 0.8, 0.7], vec![0.6, 0.5, 0.4], vec![0.95, 0.9, 0.1], vec![0.3, 0.2, 0.1]];
    let table = ScoreTable::new(
        (0..4).map(|b| format!("b{b}")).collect(),
        ["a", "b", "c"].map(String::from).to_vec(),
        values,
    )
    .unwrap();
    let r = friedman(&table, 0.05).unwrap();
    // chi-square with 2 degrees of freedom: survival function exp(-x/2).
    let oracle = (-r.statistic / 2.0).exp();
    check(
        (r.statistic - 8.0).abs() <= 1e-9 && (r.p_value - oracle).abs() <= 1e-3 && (r.p_value - 0.0183).abs() <= 1e-3,
        format!("statistic={:.12} p={:.6}", r.statistic, r.p_value),
    )
}

fn metric_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..=100 {
        for j in 0..=100 {
            let (p, r) = (i as f64 / 100.0, j as f64 / 100.0);
            let want = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            worst = worst.max((f_score(p, r, 1.0) - want).abs());
        }
    }
    // Nothing flagged: precision 1. Nothing injected: recall 1.
    let no_flags = precision_recall(0, 0, 7);
    let no_noise = precision_recall(0, 4, 0);
    let conventions = no_flags == (1.0, 0.0) && no_noise == (0.0, 1.0) && precision_recall(0, 0, 0) == (1.0, 1.0);
    check(
        worst <= 1e-12 && conventions,
        format!("max |F1 - 2PR/(P+R)| = {worst:e}; no-flag {no_flags:?}; no-noise {no_noise:?}"),
    )
}

fn run_cli(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_labelnoise")).args(args).output().unwrap();
    assert!(out.status.success(), "labelnoise {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("grid.toml");
    std::fs::write(
        &config,
        r#"
repetitions = 4
irs = ["50:50", "20:80"]
noise_levels = [0.05, 0.2]
noise_models = ["NCAR", "NAR(9:1)", "NAR(1:9)"]
thresholds = ["majority", "consensus", 3]

[dataset]
kind = "synthetic"
positives = 200
negatives = 200
dims = 2
separation = 2.5
"#,
    )
    .unwrap();
    let report = |name: &str| {
        let out_dir = dir.path().join(name);
        let args = ["experiment", "--config", config.to_str().unwrap(), "--seed", "99", "--output-dir", out_dir.to_str().unwrap()];
        run_cli(&args);
        std::fs::read(out_dir.join("report.csv")).unwrap()
    };
    let (a, b) = (report("first"), report("second"));
    check(!a.is_empty() && a == b, format!("report.csv {} bytes, identical={}", a.len(), a == b))
}

fn write_dataset(data: &Dataset, path: &Path) {
    data::write_csv(data, path).unwrap();
}

fn cleaning_sanity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let clean = synthetic(100, 100, 6.0, 10);
    let planted: BTreeSet<u64> = [7, 52, 98, 131, 176].into();
    let dirty = clean.map_labels(|i| if planted.contains(&i.id) { i.label.flipped() } else { i.label });
    let input = dir.path().join("dirty.csv");
    write_dataset(&dirty, &input);
    let removed_path = dir.path().join("removed.csv");
    run_cli(&[
        "clean",
        "--input",
        input.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        dir.path().join("cleaned.csv").to_str().unwrap(),
        "--removed",
        removed_path.to_str().unwrap(),
    ]);
    let removed: BTreeSet<u64> = std::fs::read_to_string(&removed_path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.trim().parse().unwrap())
        .collect();
    let caught = removed.intersection(&planted).count();
    let collateral = removed.len() - caught;
    check(caught >= 4 && collateral <= 2, format!("caught {caught}/5 flipped, removed {collateral} clean"))
}

fn main() {
    let grid = std::sync::OnceLock::new();
    let grid = || grid.get_or_init(synthetic_grid);
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("noise plan exactness", Box::new(noise_plan_exactness)),
        ("threshold monotonicity", Box::new(threshold_monotonicity)),
        ("imbalanced data: NAR(1:9) beats NAR(9:1)", Box::new(|| imbalanced_noise_ratio(grid()))),
        ("balanced data: noise ratio has no effect", Box::new(|| balanced_noise_ratio(grid()))),
        ("best threshold shifts with noise ratio", Box::new(|| threshold_shift(grid()))),
        ("Wilcoxon exact p-values", Box::new(wilcoxon_exactness)),
        ("Friedman statistic", Box::new(friedman_exactness)),
        ("metric identities", Box::new(metric_identities)),
        ("experiment determinism", Box::new(determinism)),
        ("cleaning sanity", Box::new(cleaning_sanity)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in checks.iter().enumerate() {
        let o = run();
        println!("{} [{:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
