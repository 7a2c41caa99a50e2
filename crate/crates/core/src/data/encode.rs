use std::collections::HashMap;

use ndarray::Array2;

use super::{Dataset, FeatureKind, SchemaFingerprint, Value};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Column {
    /// Standardized as `(x - mean) / scale`; constant columns use scale 1.
    Numeric { mean: f64, scale: f64 },
    OneHot { levels: Vec<String> },
}

/// Numeric standardization and one-hot expansion, with statistics taken
/// from the dataset the encoder was fitted on.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    fingerprint: SchemaFingerprint,
    columns: Vec<Column>,
    width: usize,
}

/// Encoded feature rows in id order.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub matrix: Array2<f64>,
    /// Ids of rows holding a categorical level unknown to the encoder; their
    /// one-hot block for that feature is all zeros.
    pub unseen: Vec<u64>,
}

impl Encoder {
    pub fn fit(data: &Dataset) -> Encoder {
        let schema = data.schema();
        let n = data.len();
        let columns: Vec<Column> = schema
            .features()
            .iter()
            .enumerate()
            .map(|(j, f)| match &f.kind {
                FeatureKind::Numeric => {
                    let xs = data.instances().iter().map(|i| match i.values[j] {
                        Value::Numeric(x) => x,
                        Value::Level(_) => unreachable!("schema-checked"),
                    });
                    let (mean, var) = if n == 0 {
                        (0.0, 0.0)
                    } else {
                        let mean = xs.clone().sum::<f64>() / n as f64;
                        let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
                        (mean, var)
                    };
                    let sd = var.sqrt();
                    Column::Numeric {
                        mean,
                        scale: if sd > 1e-12 { sd } else { 1.0 },
                    }
                }
                FeatureKind::Categorical { levels } => Column::OneHot {
                    levels: levels.clone(),
                },
            })
            .collect();
        let width = columns
            .iter()
            .map(|c| match c {
                Column::Numeric { .. } => 1,
                Column::OneHot { levels } => levels.len(),
            })
            .sum();
        Encoder {
            fingerprint: schema.fingerprint(),
            columns,
            width,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn fingerprint(&self) -> SchemaFingerprint {
        self.fingerprint
    }

    pub fn transform(&self, data: &Dataset) -> Result<Encoded> {
        let schema = data.schema();
        if schema.fingerprint() != self.fingerprint {
            return Err(Error::SchemaMismatch(
                "dataset features or label values differ from the training schema".into(),
            ));
        }
        // Map each of the dataset's level indices onto the encoder's slots.
        let remaps: Vec<Option<Vec<Option<usize>>>> = schema
            .features()
            .iter()
            .zip(&self.columns)
            .map(|(f, col)| match (&f.kind, col) {
                (FeatureKind::Categorical { levels }, Column::OneHot { levels: known }) => {
                    let slot: HashMap<&str, usize> =
                        known.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
                    Some(levels.iter().map(|l| slot.get(l.as_str()).copied()).collect())
                }
                _ => None,
            })
            .collect();

        let mut matrix = Array2::zeros((data.len(), self.width));
        let mut unseen = Vec::new();
        for (r, inst) in data.instances().iter().enumerate() {
            let mut offset = 0;
            let mut missing = false;
            for (j, col) in self.columns.iter().enumerate() {
                match (col, inst.values[j]) {
                    (Column::Numeric { mean, scale }, Value::Numeric(x)) => {
                        matrix[[r, offset]] = (x - mean) / scale;
                        offset += 1;
                    }
                    (Column::OneHot { levels }, Value::Level(l)) => {
                        let remap = remaps[j].as_ref().expect("categorical column");
                        match remap[l as usize] {
                            Some(slot) => matrix[[r, offset + slot]] = 1.0,
                            None => missing = true,
                        }
                        offset += levels.len();
                    }
                    _ => unreachable!("fingerprint guarantees matching kinds"),
                }
            }
            if missing {
                unseen.push(inst.id);
            }
        }
        Ok(Encoded { matrix, unseen })
    }
}

impl Dataset {
    /// Encodes the dataset with statistics computed on itself.
    pub fn encoded(&self) -> Array2<f64> {
        Encoder::fit(self)
            .transform(self)
            .expect("self-fitted encoder")
            .matrix
    }
}

#[cfg(test)]
mod tests {
    use super::super::{read_csv, LoadOptions};

    #[test]
    fn standardizes_and_one_hot_expands() {
        let d = read_csv(
            "a,b,label\n1,x,p\n2,y,n\n3,x,n\n".as_bytes(),
            &LoadOptions::default(),
        )
        .unwrap()
        .dataset;
        let m = d.encoded();
        assert_eq!(m.ncols(), 3);
        let col: Vec<f64> = m.column(0).to_vec();
        assert!(col.iter().sum::<f64>().abs() < 1e-12);
        let var = col.iter().map(|x| x * x).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-12);
        assert_eq!(m.column(1).to_vec(), vec![1.0, 0.0, 1.0]);
        assert_eq!(m.column(2).to_vec(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn constant_column_uses_unit_scale() {
        let d = read_csv("a,label\n4,p\n4,n\n".as_bytes(), &LoadOptions::default())
            .unwrap()
            .dataset;
        assert_eq!(d.encoded().column(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn unseen_levels_are_reported() {
        let opts = LoadOptions::default();
        let train = read_csv("c,label\nx,p\ny,n\n".as_bytes(), &opts).unwrap().dataset;
        let test = read_csv("c,label\nz,p\nx,n\n".as_bytes(), &opts).unwrap().dataset;
        let enc = super::Encoder::fit(&train);
        let out = enc.transform(&test).unwrap();
        assert_eq!(out.unseen, vec![0]);
        assert_eq!(out.matrix.row(1).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn kind_change_is_a_schema_mismatch() {
        let opts = LoadOptions::default();
        let train = read_csv("c,label\n1,p\n2,n\n".as_bytes(), &opts).unwrap().dataset;
        let test = read_csv("c,label\nz,p\nx,n\n".as_bytes(), &opts).unwrap().dataset;
        assert!(super::Encoder::fit(&train).transform(&test).is_err());
    }
}
