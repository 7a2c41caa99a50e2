// Resolve NCAR / NAR noise plans for a test set and flip labels, keeping a
// ground-truth ledger of every change.
//
//     cargo run --example noise_injection

use labelnoise::data::{self, SyntheticParams};
use labelnoise::noise::{inject, plan_noise, NoiseModel};

pub fn run_example() -> labelnoise::Result<()> {
    let test = data::generate_synthetic(
        &SyntheticParams {
            positives: 200,
            negatives: 800,
            dims: 2,
            separation: 2.0,
        },
        3,
    )?;

    for model in ["NCAR", "NAR(9:1)", "NAR(1:9)"] {
        let model: NoiseModel = model.parse()?;
        let plan = plan_noise(&test, 0.10, model)?;
        let (noisy, ledger) = inject(&test, &plan, 99)?;
        println!(
            "{model:>9}: {} minority + {} majority flips, observed positives {} -> {}",
            plan.n_minority,
            plan.n_majority,
            test.class_counts().positive,
            noisy.class_counts().positive
        );
        // Undoing the recorded flips gives back the clean labels.
        assert_eq!(ledger.restore(&noisy), test);
    }

    // Asking for more minority flips than there are minority instances fails
    // with the largest noise level that would still fit.
    match plan_noise(&test, 0.5, "NAR(9:1)".parse()?) {
        Err(e) => println!("p = 0.5 under NAR(9:1): {e}"),
        Ok(_) => unreachable!("200 minority instances cannot absorb 450 flips"),
    }

    let mut ledger_csv = Vec::new();
    let plan = plan_noise(&test, 0.02, NoiseModel::Ncar)?;
    inject(&test, &plan, 1)?.1.write_csv_to(test.schema(), &mut ledger_csv)?;
    let text = String::from_utf8_lossy(&ledger_csv);
    println!("ledger head:\n{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}

fn main() -> labelnoise::Result<()> {
    run_example()
}
