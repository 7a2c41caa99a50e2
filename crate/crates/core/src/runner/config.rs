use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::Pool;
use crate::data::{self, Dataset, ImbalanceRatio, LoadOptions, SyntheticParams};
use crate::detection::{Threshold, ThresholdSpec};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::seed;

fn default_name() -> String {
    "experiment".into()
}
fn default_repetitions() -> usize {
    100
}
fn default_train_fraction() -> f64 {
    0.7
}
fn default_folds() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_beta() -> f64 {
    1.0
}
fn default_label_column() -> String {
    "label".into()
}

/// Where the experiment's data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic {
        #[serde(default)]
        name: Option<String>,
        positives: usize,
        negatives: usize,
        dims: usize,
        separation: f64,
        /// Generator seed; derived from the master seed when absent.
        #[serde(default)]
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "default_label_column")]
        label_column: String,
        #[serde(default)]
        positive_label: Option<String>,
    },
}

impl DatasetSource {
    /// Name used in reports and folded into every derived seed.
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Synthetic { name, .. } => name.clone().unwrap_or_else(|| "synthetic".into()),
            DatasetSource::Csv { name, path, .. } => name.clone().unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into())
            }),
        }
    }

    pub fn is_file(&self) -> bool {
        matches!(self, DatasetSource::Csv { .. })
    }

    /// Loads or generates the dataset. Relative CSV paths resolve against
    /// `base_dir`.
    pub fn load(&self, master_seed: u64, base_dir: Option<&Path>) -> Result<Dataset> {
        match self {
            DatasetSource::Synthetic {
                positives,
                negatives,
                dims,
                separation,
                seed: s,
                ..
            } => {
                let params = SyntheticParams {
                    positives: *positives,
                    negatives: *negatives,
                    dims: *dims,
                    separation: *separation,
                };
                let s = s.unwrap_or_else(|| seed::derive(master_seed, &[seed::name_hash(&self.name()), 0]));
                data::generate_synthetic(&params, s)
            }
            DatasetSource::Csv {
                path,
                label_column,
                positive_label,
                ..
            } => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let options = LoadOptions {
                    positive_label: positive_label.clone(),
                    ..LoadOptions::default().with_label_column(label_column.clone())
                };
                Ok(data::load_csv(path, &options)?.dataset)
            }
        }
    }
}

/// Every knob of a full experiment grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Master seed. Required; usually supplied on the command line.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub irs: Vec<ImbalanceRatio>,
    pub noise_levels: Vec<f64>,
    pub noise_models: Vec<NoiseModel>,
    /// Thresholds to score; every `t` in `1..=N` when absent.
    #[serde(default)]
    pub thresholds: Option<Vec<ThresholdSpec>>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Consensus cleaning before undersampling. Defaults to on for CSV
    /// datasets and off for synthetic ones.
    #[serde(default)]
    pub clean: Option<bool>,
    #[serde(default = "default_folds")]
    pub cleaning_folds: usize,
    /// Draw a fresh undersample and split for every repetition.
    #[serde(default = "default_true")]
    pub resplit_per_repetition: bool,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Also inject noise (same p and model) into the training set before
    /// fitting. Off by default: only the test set is corrupted.
    #[serde(default)]
    pub inject_train: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub pool: Option<Pool>,
}

impl ExperimentConfig {
    /// Parses TOML, applying `key=value` overrides first. Keys may be dotted
    /// (`dataset.path=...`); values are TOML literals, falling back to plain
    /// strings.
    pub fn from_toml(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for (key, value) in overrides {
            set_path(&mut table, key, parse_value(value))?;
        }
        let config: ExperimentConfig = table.try_into().map_err(|e| Error::Config(format!("{e}")))?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("{e}")))
    }

    pub fn pool(&self) -> Pool {
        self.pool.clone().unwrap_or_default()
    }

    pub fn cleaning_enabled(&self) -> bool {
        self.clean.unwrap_or(self.dataset.is_file())
    }

    pub fn master_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a master seed is required (`seed` or --seed)".into()))
    }

    /// Resolved thresholds, deduplicated and ascending.
    pub fn resolved_thresholds(&self) -> Result<Vec<Threshold>> {
        let n = self.pool().len();
        let mut out = match &self.thresholds {
            None => Threshold::all(n).collect(),
            Some(specs) => specs.iter().map(|s| s.resolve(n)).collect::<Result<Vec<_>>>()?,
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.master_seed()?;
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if self.irs.is_empty() || self.noise_levels.is_empty() || self.noise_models.is_empty() {
            return bad("irs, noise_levels and noise_models must be non-empty".into());
        }
        if let Some(p) = self.noise_levels.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return bad(format!("noise level {p} outside (0, 1]"));
        }
        if matches!(&self.thresholds, Some(t) if t.is_empty()) {
            return bad("thresholds must be non-empty when given".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if self.cleaning_folds < 2 {
            return bad("cleaning_folds must be >= 2".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta {} must be a non-negative number", self.beta));
        }
        for spec in self.pool().members() {
            spec.validate()?;
        }
        self.resolved_thresholds()?;
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // Wrap in a one-key document so TOML does the literal parsing.
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("empty override key `{key}`")))?;
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Splits `key=value` override strings.
pub fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        irs = ["20:80", "50:50"]
        noise_levels = [0.1, 0.2]
        noise_models = ["NCAR", "NAR(9:1)", "NAR(1:9)"]

        [dataset]
        kind = "synthetic"
        positives = 100
        negatives = 100
        dims = 2
        separation = 2.0
    "#;

    #[test]
    fn defaults_apply() {
        let c = ExperimentConfig::from_toml(BASE, &[]).unwrap();
        assert_eq!(c.repetitions, 100);
        assert_eq!(c.train_fraction, 0.7);
        assert!(c.resplit_per_repetition);
        assert!(!c.cleaning_enabled());
        assert_eq!(c.pool().len(), 10);
        assert_eq!(c.resolved_thresholds().unwrap().len(), 10);
        assert!(matches!(c.validate(), Err(Error::Config(_))), "seed is required");
    }

    #[test]
    fn overrides_take_precedence() {
        let o = parse_overrides(&[
            "seed=7".into(),
            "repetitions = 3".into(),
            "dataset.separation=4.5".into(),
            "thresholds=[\"majority\", 2, \"30%\"]".into(),
            "name=run-a".into(),
        ])
        .unwrap();
        let c = ExperimentConfig::from_toml(BASE, &o).unwrap();
        c.validate().unwrap();
        assert_eq!((c.seed, c.repetitions, c.name.as_str()), (Some(7), 3, "run-a"));
        assert!(matches!(c.dataset, DatasetSource::Synthetic { separation, .. } if separation == 4.5));
        let t: Vec<usize> = c.resolved_thresholds().unwrap().iter().map(|t| t.t()).collect();
        assert_eq!(t, vec![2, 3, 6]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let with = |k: &str, v: &str| {
            let o = vec![("seed".to_string(), "1".to_string()), (k.to_string(), v.to_string())];
            ExperimentConfig::from_toml(BASE, &o).and_then(|c| c.validate())
        };
        assert!(with("noise_levels", "[0.0]").is_err());
        assert!(with("noise_levels", "[]").is_err());
        assert!(with("repetitions", "0").is_err());
        assert!(with("thresholds", "[11]").is_err());
        assert!(with("noise_models", "[\"NAR(0:1)\"]").is_err());
        assert!(with("bogus", "1").is_err());
        assert!(with("train_fraction", "1.0").is_err());
        assert!(parse_overrides(&["novalue".into()]).is_err());
    }

    #[test]
    fn csv_sources_clean_by_default_and_pools_parse() {
        let text = r#"
            seed = 1
            irs = ["50:50"]
            noise_levels = [0.1]
            noise_models = ["NCAR"]
            [dataset]
            kind = "csv"
            path = "data/heart.csv"
            [[pool]]
            kind = "knn"
            k = 3
            [[pool]]
            kind = "gaussian-nb"
        "#;
        let c = ExperimentConfig::from_toml(text, &[]).unwrap();
        assert!(c.cleaning_enabled());
        assert_eq!(c.dataset.name(), "heart");
        assert_eq!(c.pool().len(), 2);
        assert_eq!(Threshold::majority(2).t(), 2);
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(back, c);
    }
}
