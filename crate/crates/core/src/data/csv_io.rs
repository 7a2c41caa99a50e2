use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::{Class, Dataset, Feature, FeatureKind, Instance, Schema, Value};
use crate::error::{Error, Result};

/// Forces the kind of a column instead of inferring it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindHint {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub label_column: String,
    /// Column holding integer instance ids. When absent from the file, ids
    /// are the zero-based data row numbers (dropped rows leave gaps).
    pub id_column: String,
    /// Label value treated as the positive class. Defaults to the larger of
    /// the two labels (numeric order if both parse as numbers).
    pub positive_label: Option<String>,
    pub kinds: HashMap<String, KindHint>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            label_column: "label".into(),
            id_column: "id".into(),
            positive_label: None,
            kinds: HashMap::new(),
        }
    }
}

impl LoadOptions {
    pub fn with_label_column(mut self, name: impl Into<String>) -> Self {
        self.label_column = name.into();
        self
    }
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub dataset: Dataset,
    /// Rows discarded because at least one field was empty.
    pub dropped: usize,
}

pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options).map_err(|e| match e {
        Error::EmptyFile(_) => Error::EmptyFile(path.to_path_buf()),
        other => other,
    })
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn read_csv<R: Read>(reader: R, options: &LoadOptions) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyFile(Default::default()));
    }
    let label_idx = header
        .iter()
        .position(|h| *h == options.label_column)
        .ok_or_else(|| Error::MissingLabelColumn(options.label_column.clone()))?;
    let id_idx = header.iter().position(|h| *h == options.id_column);

    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    let mut dropped = 0;
    let mut n_rows = 0;
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        n_rows += 1;
        if record.len() != header.len() || record.iter().any(str::is_empty) {
            dropped += 1;
            continue;
        }
        rows.push((row_no, record));
    }
    if n_rows == 0 {
        return Err(Error::EmptyFile(Default::default()));
    }

    let distinct: BTreeSet<&str> = rows.iter().map(|(_, r)| &r[label_idx]).collect();
    if distinct.len() != 2 {
        return Err(Error::LabelCount {
            found: distinct.len(),
            labels: distinct.into_iter().map(str::to_string).collect(),
        });
    }
    let mut labels: Vec<&str> = distinct.into_iter().collect();
    if labels.iter().all(|l| parse_number(l).is_some()) {
        labels.sort_by(|a, b| parse_number(a).unwrap().total_cmp(&parse_number(b).unwrap()));
    }
    let (negative, positive) = match &options.positive_label {
        Some(p) if p == labels[0] => (labels[1], labels[0]),
        Some(p) if p == labels[1] => (labels[0], labels[1]),
        Some(p) => {
            return Err(Error::InvalidParameter(format!(
                "positive label `{p}` not present in label column"
            )))
        }
        None => (labels[0], labels[1]),
    };

    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_idx && Some(c) != id_idx)
        .collect();
    let mut features = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let name = &header[c];
        let all_numeric = rows.iter().all(|(_, r)| parse_number(&r[c]).is_some());
        let kind = match options.kinds.get(name) {
            Some(KindHint::Numeric) if !all_numeric => {
                return Err(Error::InvalidDataset(format!(
                    "column `{name}` declared numeric but holds non-numeric values"
                )))
            }
            Some(KindHint::Numeric) => FeatureKind::Numeric,
            Some(KindHint::Categorical) => categorical_kind(&rows, c),
            None if all_numeric => FeatureKind::Numeric,
            None => categorical_kind(&rows, c),
        };
        features.push(Feature {
            name: name.clone(),
            kind,
        });
    }
    let schema = Arc::new(Schema::new(
        features,
        options.label_column.clone(),
        negative,
        positive,
    )?);

    let level_maps: Vec<Option<HashMap<&str, u32>>> = schema
        .features()
        .iter()
        .map(|f| match &f.kind {
            FeatureKind::Numeric => None,
            FeatureKind::Categorical { levels } => Some(
                levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i as u32))
                    .collect(),
            ),
        })
        .collect();

    let mut seen_ids = HashSet::new();
    let mut instances = Vec::with_capacity(rows.len());
    for (row_no, r) in &rows {
        let id = match id_idx {
            Some(c) => r[c].parse::<u64>().map_err(|_| {
                Error::InvalidDataset(format!("id `{}` is not a non-negative integer", &r[c]))
            })?,
            None => *row_no as u64,
        };
        if !seen_ids.insert(id) {
            return Err(Error::InvalidDataset(format!("duplicate id {id}")));
        }
        let values = feature_cols
            .iter()
            .zip(&level_maps)
            .map(|(&c, map)| match map {
                None => Value::Numeric(parse_number(&r[c]).expect("checked numeric")),
                Some(m) => Value::Level(m[&r[c]]),
            })
            .collect();
        let label = if &r[label_idx] == positive {
            Class::Positive
        } else {
            Class::Negative
        };
        instances.push(Instance { id, values, label });
    }
    Ok(Loaded {
        dataset: Dataset::new(schema, instances)?,
        dropped,
    })
}

fn categorical_kind(rows: &[(usize, csv::StringRecord)], col: usize) -> FeatureKind {
    let levels: BTreeSet<&str> = rows.iter().map(|(_, r)| &r[col]).collect();
    FeatureKind::Categorical {
        levels: levels.into_iter().map(str::to_string).collect(),
    }
}

/// Writes `id`, the feature columns and the label column, in id order.
pub fn write_csv_to<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let schema = data.schema();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(schema.features().iter().map(|f| f.name.clone()));
    header.push(schema.label_column().to_string());
    w.write_record(&header)?;
    for inst in data.instances() {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(inst.id.to_string());
        for (v, f) in inst.values.iter().zip(schema.features()) {
            rec.push(match (v, &f.kind) {
                (Value::Numeric(x), _) => x.to_string(),
                (Value::Level(l), FeatureKind::Categorical { levels }) => levels[*l as usize].clone(),
                (Value::Level(l), FeatureKind::Numeric) => l.to_string(),
            });
        }
        rec.push(schema.label_value(inst.label).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(data, std::io::BufWriter::new(file))
}
