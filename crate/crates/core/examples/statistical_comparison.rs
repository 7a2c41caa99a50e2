// Friedman and Wilcoxon signed-rank tests over a table of F-scores, with
// win/tie/loss counts per pair of treatments.
//
//     cargo run --example statistical_comparison

use labelnoise::stats::{friedman, wilcoxon_signed_rank, wtl_matrix, ScoreTable};

pub fn run_example() -> labelnoise::Result<()> {
    let treatments = vec!["NCAR".to_string(), "NAR(9:1)".into(), "NAR(1:9)".into()];
    // Nineteen problems; NAR(1:9) tends to score highest, NAR(9:1) lowest.
    let values: Vec<Vec<f64>> = (0..19)
        .map(|b| {
            let base = 0.55 + 0.02 * (b % 7) as f64;
            let wobble = if b % 5 == 0 { -0.03 } else { 0.0 };
            vec![base, base - 0.04 + wobble, base + 0.03]
        })
        .collect();
    let blocks = (0..19).map(|b| format!("problem-{b}")).collect();
    let table = ScoreTable::new(blocks, treatments.clone(), values)?;

    let f = friedman(&table, 0.05)?;
    println!("Friedman chi2 = {:.3}, p = {:.2e}, significant = {}", f.statistic, f.p_value, f.significant);

    for cell in wtl_matrix(&table, 0.05)? {
        let wtl = cell.result.wtl.unwrap();
        println!(
            "{:>9} vs {:<9} W/T/L {}/{}/{}  p = {:.2e}",
            treatments[cell.col], treatments[cell.row], wtl.wins, wtl.ties, wtl.losses, cell.result.p_value
        );
    }

    let exact = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5], 0.05)?;
    println!("differences +1..+5: exact two-sided p = {}", exact.p_value);
    Ok(())
}

fn main() -> labelnoise::Result<()> {
    run_example()
}
