// A small seeded experiment grid and the F-score curve over vote thresholds
// for each noise model.
//
//     cargo run --release --example threshold_sweep

use labelnoise::runner::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
name = "threshold-sweep"
seed = 7
repetitions = 5
irs = ["20:80"]
noise_levels = [0.15]
noise_models = ["NCAR", "NAR(9:1)", "NAR(1:9)"]

[dataset]
kind = "synthetic"
positives = 300
negatives = 300
dims = 2
separation = 2.5
"#;

pub fn run_example() -> labelnoise::Result<()> {
    let config = ExperimentConfig::from_toml(CONFIG, &[])?;
    let out = run_experiment(&config, None)?;
    let curves = out.curves.expect("all thresholds are scored by default");

    for peak in &curves.peaks {
        let line: Vec<String> = curves
            .points
            .iter()
            .filter(|p| p.model == peak.model && p.m == peak.m)
            .map(|p| format!("{:.2}", p.fscore_mean))
            .collect();
        println!("{:>9} | {} | best t = {}", peak.model_label(), line.join(" "), peak.best_t);
    }
    Ok(())
}

fn main() -> labelnoise::Result<()> {
    run_example()
}
