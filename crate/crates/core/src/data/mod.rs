//! Binary-labelled instance tables.
//!
//! A [`Dataset`] is an immutable, id-ordered list of [`Instance`]s that share
//! one [`Schema`]. Every transformation (split, undersampling, noise
//! injection, cleaning) returns a new dataset and preserves instance ids.

mod csv_io;
mod encode;
mod synth;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to, KindHint, LoadOptions, Loaded};
pub use encode::{Encoded, Encoder};
pub use synth::{generate_synthetic, SyntheticParams};

/// Slack added before flooring fractional counts so that products such as
/// `0.7 * 50` land on the intended integer.
pub(crate) const COUNT_EPS: f64 = 1e-9;

pub(crate) fn floor_count(x: f64) -> usize {
    (x + COUNT_EPS).floor().max(0.0) as usize
}

/// One of the two classes of a binary problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Negative,
    Positive,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::Negative, Class::Positive];

    pub fn flipped(self) -> Class {
        match self {
            Class::Negative => Class::Positive,
            Class::Positive => Class::Negative,
        }
    }

    fn index(self) -> usize {
        match self {
            Class::Negative => 0,
            Class::Positive => 1,
        }
    }
}

/// Kind of a feature column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    /// Categorical column; levels are the distinct values seen at ingestion,
    /// sorted lexicographically.
    Categorical { levels: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numeric(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical { levels },
        }
    }

    /// Number of encoded columns this feature expands to.
    pub fn encoded_width(&self) -> usize {
        match &self.kind {
            FeatureKind::Numeric => 1,
            FeatureKind::Categorical { levels } => levels.len(),
        }
    }
}

/// Identifies schemas that are compatible for fit/predict: same feature
/// names, same feature kinds, same label values. Categorical level lists
/// are deliberately not part of the fingerprint; unseen levels are handled
/// per instance at prediction time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SchemaFingerprint(pub u64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    features: Vec<Feature>,
    label_column: String,
    /// `[negative, positive]`
    label_values: [String; 2],
}

impl Schema {
    pub fn new(
        features: Vec<Feature>,
        label_column: impl Into<String>,
        negative: impl Into<String>,
        positive: impl Into<String>,
    ) -> Result<Self> {
        let label_column = label_column.into();
        let (negative, positive) = (negative.into(), positive.into());
        if negative == positive {
            return Err(Error::LabelCount {
                found: 1,
                labels: vec![negative],
            });
        }
        let mut seen = HashSet::new();
        for f in &features {
            if f.name == label_column || !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate column name `{}`",
                    f.name
                )));
            }
        }
        Ok(Schema {
            features,
            label_column,
            label_values: [negative, positive],
        })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn label_value(&self, class: Class) -> &str {
        &self.label_values[class.index()]
    }

    pub fn class_of(&self, value: &str) -> Option<Class> {
        Class::BOTH
            .into_iter()
            .find(|&c| self.label_value(c) == value)
    }

    pub fn encoded_width(&self) -> usize {
        self.features.iter().map(Feature::encoded_width).sum()
    }

    pub fn fingerprint(&self) -> SchemaFingerprint {
        let mut text = String::new();
        for f in &self.features {
            let kind = match f.kind {
                FeatureKind::Numeric => "num",
                FeatureKind::Categorical { .. } => "cat",
            };
            text.push_str(&format!("{}\x1f{}\x1e", f.name, kind));
        }
        text.push_str(&format!(
            "{}\x1f{}\x1f{}",
            self.label_column, self.label_values[0], self.label_values[1]
        ));
        SchemaFingerprint(seed::name_hash(&text))
    }
}

/// A raw feature value. Categorical values index into the feature's levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Numeric(f64),
    Level(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: u64,
    pub values: Vec<Value>,
    pub label: Class,
}

/// Per-class instance counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub negative: usize,
    pub positive: usize,
}

impl ClassCounts {
    pub fn get(&self, class: Class) -> usize {
        match class {
            Class::Negative => self.negative,
            Class::Positive => self.positive,
        }
    }

    pub fn total(&self) -> usize {
        self.negative + self.positive
    }

    /// The class with fewer instances; ties resolve to [`Class::Positive`].
    pub fn minority(&self) -> Class {
        if self.negative < self.positive {
            Class::Negative
        } else {
            Class::Positive
        }
    }

    /// The class holding more instances; ties resolve to
    /// [`Class::Negative`].
    pub fn majority(&self) -> Class {
        self.minority().flipped()
    }
}

/// Minority:majority proportion as integer percentage shares, e.g. `20:80`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ImbalanceRatio {
    minority: u32,
    majority: u32,
}

impl ImbalanceRatio {
    pub const BALANCED: ImbalanceRatio = ImbalanceRatio {
        minority: 50,
        majority: 50,
    };

    pub fn new(minority: u32, majority: u32) -> Result<Self> {
        if minority == 0 || majority == 0 || minority > majority || minority + majority != 100 {
            return Err(Error::InvalidRatio { minority, majority });
        }
        Ok(ImbalanceRatio { minority, majority })
    }

    pub fn minority(&self) -> u32 {
        self.minority
    }

    pub fn majority(&self) -> u32 {
        self.majority
    }

    /// Ratio observed in a set of class counts, rounded to whole percent.
    /// Minority share is clamped to at least 1.
    pub fn observed(counts: ClassCounts) -> Option<Self> {
        let total = counts.total();
        if total == 0 {
            return None;
        }
        let min = counts.get(counts.minority()) as f64;
        let share = ((100.0 * min / total as f64 + 0.5).floor() as u32).clamp(1, 50);
        Some(ImbalanceRatio {
            minority: share,
            majority: 100 - share,
        })
    }
}

impl fmt::Display for ImbalanceRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.minority, self.majority)
    }
}

impl FromStr for ImbalanceRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse imbalance ratio `{s}`"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        ImbalanceRatio::new(a, b)
    }
}

impl Serialize for ImbalanceRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ImbalanceRatio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Immutable binary dataset, instances kept in ascending id order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(schema: Arc<Schema>, mut instances: Vec<Instance>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if !ids.insert(inst.id) {
                return Err(Error::InvalidDataset(format!("duplicate id {}", inst.id)));
            }
            if inst.values.len() != schema.features.len() {
                return Err(Error::InvalidDataset(format!(
                    "instance {} has {} values, schema has {} features",
                    inst.id,
                    inst.values.len(),
                    schema.features.len()
                )));
            }
            for (v, f) in inst.values.iter().zip(&schema.features) {
                let ok = match (v, &f.kind) {
                    (Value::Numeric(x), FeatureKind::Numeric) => x.is_finite(),
                    (Value::Level(l), FeatureKind::Categorical { levels }) => {
                        (*l as usize) < levels.len()
                    }
                    _ => false,
                };
                if !ok {
                    return Err(Error::InvalidDataset(format!(
                        "instance {} has an invalid value for feature `{}`",
                        inst.id, f.name
                    )));
                }
            }
        }
        instances.sort_by_key(|i| i.id);
        Ok(Dataset { schema, instances })
    }

    /// Builds a dataset from instances already known to be valid for `schema`.
    pub(crate) fn from_parts(schema: Arc<Schema>, mut instances: Vec<Instance>) -> Self {
        instances.sort_by_key(|i| i.id);
        Dataset { schema, instances }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.instances.iter().map(|i| i.id)
    }

    pub fn id_set(&self) -> BTreeSet<u64> {
        self.ids().collect()
    }

    pub fn labels(&self) -> Vec<Class> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn class_counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for inst in &self.instances {
            match inst.label {
                Class::Negative => c.negative += 1,
                Class::Positive => c.positive += 1,
            }
        }
        c
    }

    pub fn imbalance_ratio(&self) -> Option<ImbalanceRatio> {
        ImbalanceRatio::observed(self.class_counts())
    }

    /// Instances whose id is in `ids`.
    pub fn select(&self, ids: &BTreeSet<u64>) -> Dataset {
        self.filter(|i| ids.contains(&i.id))
    }

    /// Instances whose id is not in `ids`.
    pub fn without(&self, ids: &BTreeSet<u64>) -> Dataset {
        self.filter(|i| !ids.contains(&i.id))
    }

    fn filter(&self, keep: impl Fn(&Instance) -> bool) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            instances: self.instances.iter().filter(|i| keep(i)).cloned().collect(),
        }
    }

    /// Same instances with labels replaced through `relabel`.
    pub fn map_labels(&self, mut relabel: impl FnMut(&Instance) -> Class) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            instances: self
                .instances
                .iter()
                .map(|i| Instance {
                    label: relabel(i),
                    ..i.clone()
                })
                .collect(),
        }
    }

    fn class_ids(&self, class: Class) -> Vec<u64> {
        self.instances
            .iter()
            .filter(|i| i.label == class)
            .map(|i| i.id)
            .collect()
    }
}

/// Disjoint train/test partition of a parent dataset.
#[derive(Clone, Debug)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub train_fraction: f64,
}

/// Stratified split: each class is shuffled independently and its first
/// `floor(n_c * train_fraction)` instances go to training.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut train_ids = BTreeSet::new();
    for class in Class::BOTH {
        let mut ids = data.class_ids(class);
        ids.shuffle(&mut rng);
        let n_train = floor_count(ids.len() as f64 * train_fraction);
        let label = data.schema.label_value(class).to_string();
        if n_train == 0 {
            return Err(Error::EmptySplitSide {
                class: label,
                side: "train",
            });
        }
        if n_train == ids.len() {
            return Err(Error::EmptySplitSide {
                class: label,
                side: "test",
            });
        }
        train_ids.extend(&ids[..n_train]);
    }
    Ok(SplitPair {
        train: data.select(&train_ids),
        test: data.without(&train_ids),
        train_fraction,
    })
}

/// Class counts retained when reducing `(minority, majority)` counts to
/// `target = a:b` by removal only.
///
/// Counts are floor-consistent with the ratio: the retained minority count
/// is `floor(y * a / b)` for a retained majority count `y`. Among such
/// pairs the one with the largest total is chosen. When the majority is the
/// over-represented class, the minority is kept whole and the majority cut
/// to the largest `y` still compatible with it.
pub fn undersample_counts(minority: usize, majority: usize, target: ImbalanceRatio) -> (usize, usize) {
    let (a, b) = (target.minority() as usize, target.majority() as usize);
    let implied_minority = majority * a / b;
    if implied_minority <= minority {
        (implied_minority, majority)
    } else {
        // Largest y with floor(y * a / b) == minority, i.e. y * a < (minority + 1) * b.
        (minority, (((minority + 1) * b - 1) / a).min(majority))
    }
}

/// Randomly removes instances from whichever class is over-represented
/// relative to `target`, maximizing the number of retained instances.
pub fn undersample_to_ir(data: &Dataset, target: ImbalanceRatio, seed: u64) -> Result<Dataset> {
    let counts = data.class_counts();
    let (min_class, maj_class) = (counts.minority(), counts.majority());
    let (keep_min, keep_maj) =
        undersample_counts(counts.get(min_class), counts.get(maj_class), target);
    if keep_min == 0 || keep_maj == 0 {
        return Err(Error::UndersampleEmpty {
            target: target.to_string(),
        });
    }
    let mut rng = seed::rng(seed);
    let mut keep = BTreeSet::new();
    for (class, n) in [(min_class, keep_min), (maj_class, keep_maj)] {
        let ids = data.class_ids(class);
        keep.extend(index::sample(&mut rng, ids.len(), n).into_iter().map(|i| ids[i]));
    }
    Ok(data.select(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy(neg: usize, pos: usize) -> Dataset {
        let schema = Arc::new(Schema::new(vec![Feature::numeric("x")], "label", "neg", "pos").unwrap());
        let instances = (0..neg + pos)
            .map(|i| Instance {
                id: i as u64,
                values: vec![Value::Numeric(i as f64)],
                label: if i < neg { Class::Negative } else { Class::Positive },
            })
            .collect();
        Dataset::new(schema, instances).unwrap()
    }

    #[test]
    fn split_is_exactly_stratified() {
        let d = toy(50, 50);
        let s = split(&d, 0.7, 11).unwrap();
        assert_eq!(s.train.len(), 70);
        assert_eq!(s.test.len(), 30);
        assert_eq!(s.train.class_counts(), ClassCounts { negative: 35, positive: 35 });
        assert_eq!(s.test.class_counts(), ClassCounts { negative: 15, positive: 15 });
    }

    #[test]
    fn split_is_deterministic() {
        let d = toy(50, 50);
        let a = split(&d, 0.7, 5).unwrap();
        let b = split(&d, 0.7, 5).unwrap();
        assert_eq!(a.train.id_set(), b.train.id_set());
        assert_eq!(a.test.id_set(), b.test.id_set());
    }

    #[test]
    fn split_rejects_empty_minority_side() {
        let d = toy(9, 1);
        assert!(matches!(
            split(&d, 0.7, 1),
            Err(Error::EmptySplitSide { side: "train", .. })
        ));
        assert!(split(&toy(10, 10), 1.0, 1).is_err());
    }

    #[test]
    fn undersample_examples() {
        let r = |s: &str| s.parse::<ImbalanceRatio>().unwrap();
        assert_eq!(undersample_counts(350, 650, r("50:50")), (350, 350));
        assert_eq!(undersample_counts(350, 650, r("20:80")), (162, 650));
        assert_eq!(undersample_counts(200, 800, r("20:80")), (200, 800));
    }

    #[test]
    fn undersample_preserves_ids_and_reaches_counts() {
        let d = toy(650, 350);
        let out = undersample_to_ir(&d, "20:80".parse().unwrap(), 3).unwrap();
        assert_eq!(out.class_counts(), ClassCounts { negative: 650, positive: 162 });
        assert!(out.id_set().is_subset(&d.id_set()));
        let again = undersample_to_ir(&d, "20:80".parse().unwrap(), 3).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn undersample_errors_when_class_vanishes() {
        let d = toy(1, 1);
        assert!(matches!(
            undersample_to_ir(&d, "20:80".parse().unwrap(), 0),
            Err(Error::UndersampleEmpty { .. })
        ));
    }

    #[test]
    fn ratio_validation() {
        assert!(ImbalanceRatio::new(20, 80).is_ok());
        assert!(ImbalanceRatio::new(80, 20).is_err());
        assert!(ImbalanceRatio::new(0, 100).is_err());
        assert!(ImbalanceRatio::new(30, 60).is_err());
        assert!("a:b".parse::<ImbalanceRatio>().is_err());
        assert_eq!("30:70".parse::<ImbalanceRatio>().unwrap().to_string(), "30:70");
    }

    #[test]
    fn observed_ratio_rounds_to_percent() {
        let d = toy(66, 34);
        assert_eq!(d.imbalance_ratio().unwrap().to_string(), "34:66");
        assert_eq!(d.class_counts().minority(), Class::Positive);
    }

    #[test]
    fn dataset_rejects_duplicate_ids_and_sorts() {
        let schema = Arc::new(Schema::new(vec![Feature::numeric("x")], "label", "a", "b").unwrap());
        let inst = |id| Instance {
            id,
            values: vec![Value::Numeric(0.0)],
            label: Class::Negative,
        };
        assert!(Dataset::new(Arc::clone(&schema), vec![inst(1), inst(1)]).is_err());
        let d = Dataset::new(schema, vec![inst(5), inst(2)]).unwrap();
        assert_eq!(d.ids().collect::<Vec<_>>(), vec![2, 5]);
    }
}

#[cfg(test)]
mod undersample_oracle {
    use super::{undersample_counts, ImbalanceRatio};

    /// Exhaustive search over every pair (x, y) with x = floor(y * a / b).
    fn brute_force(minority: usize, majority: usize, r: ImbalanceRatio) -> (usize, usize) {
        let (a, b) = (r.minority() as usize, r.majority() as usize);
        let mut best = (0, 0);
        for y in 0..=majority {
            for x in 0..=minority {
                if x == y * a / b && x + y > best.0 + best.1 {
                    best = (x, y);
                }
            }
        }
        best
    }

    #[test]
    fn matches_exhaustive_search() {
        for ratio in ["50:50", "30:70", "20:80", "10:90", "45:55"] {
            let r: ImbalanceRatio = ratio.parse().unwrap();
            for m in 0..40 {
                for big in m..70 {
                    assert_eq!(undersample_counts(m, big, r), brute_force(m, big, r), "{m} {big} {ratio}");
                }
            }
        }
        let r: ImbalanceRatio = "20:80".parse().unwrap();
        assert_eq!(brute_force(350, 650, r), (162, 650));
    }
}
