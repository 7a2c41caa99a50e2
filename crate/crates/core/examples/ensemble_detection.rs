// Train the ten-member pool on clean data, corrupt the test labels and flag
// instances by vote count at several thresholds.
//
//     cargo run --example ensemble_detection

use labelnoise::classifiers::default_pool;
use labelnoise::data::{self, SyntheticParams};
use labelnoise::detection::{flag, predict_pool, Threshold};
use labelnoise::evaluation::{score, Scores};
use labelnoise::noise::{inject, plan_noise, NoiseModel};

pub fn run_example() -> labelnoise::Result<()> {
    let all = data::generate_synthetic(
        &SyntheticParams {
            positives: 300,
            negatives: 300,
            dims: 2,
            separation: 3.0,
        },
        5,
    )?;
    let pair = data::split(&all, 0.7, 1)?;
    let pool = default_pool();
    for member in pool.members() {
        println!("pool member: {}", member.learner);
    }

    // Fitting happens once; the same predictions can be tallied against any
    // noisy copy of the test set.
    let predictions = predict_pool(&pool, &pair.train, &pair.test, 17)?;
    let plan = plan_noise(&pair.test, 0.15, NoiseModel::Ncar)?;
    let (noisy, ledger) = inject(&pair.test, &plan, 23)?;
    let votes = predictions.tally(&noisy)?;

    let n = pool.len();
    for t in [Threshold::new(1, n)?, Threshold::majority(n), Threshold::consensus(n)] {
        let result = flag(&votes, t)?;
        let s = Scores::from_counts(&score(&result, &ledger)?, 1.0);
        println!(
            "{t}: flagged {:>3}  precision {:.3}  recall {:.3}  F1 {:.3}",
            result.flagged.len(),
            s.precision,
            s.recall,
            s.fscore
        );
    }
    Ok(())
}

fn main() -> labelnoise::Result<()> {
    run_example()
}
