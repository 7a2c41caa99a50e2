// Generate two Gaussian clusters, reduce them to a 20:80 imbalance and draw
// a stratified 70/30 split.
//
//     cargo run --example synthetic_data

use labelnoise::data::{self, ImbalanceRatio, SyntheticParams};

pub fn run_example() -> labelnoise::Result<()> {
    let params = SyntheticParams {
        positives: 500,
        negatives: 500,
        dims: 2,
        separation: 2.5,
    };
    let full = data::generate_synthetic(&params, 42)?;
    println!("generated {} instances ({})", full.len(), full.imbalance_ratio().unwrap());

    let target: ImbalanceRatio = "20:80".parse()?;
    let imbalanced = data::undersample_to_ir(&full, target, 7)?;
    let counts = imbalanced.class_counts();
    println!(
        "undersampled to {target}: {} positive / {} negative",
        counts.positive, counts.negative
    );
    assert_eq!(imbalanced.imbalance_ratio(), Some(target));

    let pair = data::split(&imbalanced, 0.7, 11)?;
    println!("train {} / test {}", pair.train.len(), pair.test.len());
    assert_eq!(pair.train.len() + pair.test.len(), imbalanced.len());
    Ok(())
}

fn main() -> labelnoise::Result<()> {
    run_example()
}
