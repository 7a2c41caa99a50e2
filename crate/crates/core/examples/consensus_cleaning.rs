// Cross-validated consensus filtering: instances misclassified by every pool
// member in 10-fold cross-validation are removed.
//
//     cargo run --example consensus_cleaning

use std::collections::BTreeSet;

use labelnoise::classifiers::Pool;
use labelnoise::data::{self, SyntheticParams};
use labelnoise::detection::{clean_consensus, flag, Threshold};

pub fn run_example() -> labelnoise::Result<()> {
    let clean = data::generate_synthetic(
        &SyntheticParams {
            positives: 100,
            negatives: 100,
            dims: 2,
            separation: 6.0,
        },
        8,
    )?;
    // Mislabel five instances.
    let planted: BTreeSet<u64> = [3, 40, 77, 120, 190].into();
    let dirty = clean.map_labels(|i| if planted.contains(&i.id) { i.label.flipped() } else { i.label });

    let pool = Pool::default();
    let out = clean_consensus(&dirty, &pool, 10, 2024)?;
    let caught = out.removed.intersection(&planted).count();
    println!(
        "removed {} instances, {caught} of {} planted errors",
        out.removed.len(),
        planted.len()
    );

    // Majority voting on the same out-of-fold votes is more aggressive.
    let majority = flag(&out.votes, Threshold::majority(pool.len()))?.flagged;
    println!("majority vote would remove {}", majority.len());
    assert!(out.removed.is_subset(&majority));
    Ok(())
}

fn main() -> labelnoise::Result<()> {
    run_example()
}
