// Load a CSV with numeric and categorical columns, inspect the inferred
// schema and encoding, and write it back out.
//
//     cargo run --example csv_roundtrip

use labelnoise::data::{read_csv, write_csv_to, Encoder, FeatureKind, LoadOptions};

const CSV: &str = "\
age,chest_pain,cholesterol,diagnosis
63,typical,233,present
37,non-anginal,250,absent
41,atypical,204,absent
56,atypical,236,absent
57,asymptomatic,354,present
57,asymptomatic,,present
62,asymptomatic,268,present
";

pub fn run_example() -> labelnoise::Result<()> {
    let options = LoadOptions {
        positive_label: Some("present".into()),
        ..LoadOptions::default().with_label_column("diagnosis")
    };
    let loaded = read_csv(CSV.as_bytes(), &options)?;
    let data = loaded.dataset;
    println!("{} rows kept, {} dropped for missing values", data.len(), loaded.dropped);
    for f in data.schema().features() {
        match &f.kind {
            FeatureKind::Numeric => println!("  {:<12} numeric", f.name),
            FeatureKind::Categorical { levels } => println!("  {:<12} categorical {levels:?}", f.name),
        }
    }

    let encoded = Encoder::fit(&data).transform(&data)?;
    println!("encoded matrix: {} x {}", encoded.matrix.nrows(), encoded.matrix.ncols());

    let mut out = Vec::new();
    write_csv_to(&data, &mut out)?;
    let again = read_csv(out.as_slice(), &options)?.dataset;
    assert_eq!(again, data);
    println!("round trip preserved ids, features and labels");
    Ok(())
}

fn main() -> labelnoise::Result<()> {
    run_example()
}
