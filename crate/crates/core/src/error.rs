use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every stage of the label-noise pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty file: {0}")]
    EmptyFile(PathBuf),

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("expected exactly two distinct labels, found {found}: {labels:?}")]
    LabelCount { found: usize, labels: Vec<String> },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid imbalance ratio {minority}:{majority} (shares must be positive, minority <= majority, sum 100)")]
    InvalidRatio { minority: u32, majority: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("split would leave class `{class}` with no instances on the {side} side")]
    EmptySplitSide { class: String, side: &'static str },

    #[error("undersampling to {target} would leave a class empty")]
    UndersampleEmpty { target: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(
        "infeasible noise plan: {n_minority} minority flips (available {minority_available}), \
         {n_majority} majority flips (available {majority_available}); maximal feasible p = {max_feasible_p}"
    )]
    InfeasiblePlan {
        n_minority: usize,
        n_majority: usize,
        minority_available: usize,
        majority_available: usize,
        max_feasible_p: f64,
    },

    #[error("noise plan was built for {planned} test instances but the dataset has {actual}")]
    PlanMismatch { planned: usize, actual: usize },

    #[error("threshold {t} outside [1, {pool_size}]")]
    InvalidThreshold { t: usize, pool_size: usize },

    #[error("classifier #{index} ({kind}) failed: {source}")]
    Member {
        index: usize,
        kind: String,
        #[source]
        source: Box<Error>,
    },

    #[error("instance id sets differ: {0}")]
    IdMismatch(String),

    #[error("cannot aggregate scores from different configurations")]
    MixedKeys,

    #[error("missing thresholds for cell {cell}: {missing:?}")]
    MissingThresholds { cell: String, missing: Vec<usize> },

    #[error("misaligned blocks: {0}")]
    MisalignedBlocks(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Config(_) => "config",
            Error::EmptyFile(_) => "empty_file",
            Error::MissingLabelColumn(_) => "missing_label_column",
            Error::LabelCount { .. } => "label_count",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::InvalidRatio { .. } => "invalid_ratio",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::EmptySplitSide { .. } => "empty_split_side",
            Error::UndersampleEmpty { .. } => "undersample_empty",
            Error::SchemaMismatch(_) => "schema_mismatch",
            Error::InfeasiblePlan { .. } => "infeasible_plan",
            Error::PlanMismatch { .. } => "plan_mismatch",
            Error::InvalidThreshold { .. } => "invalid_threshold",
            Error::Member { .. } => "classifier",
            Error::IdMismatch(_) => "id_mismatch",
            Error::MixedKeys => "mixed_keys",
            Error::MissingThresholds { .. } => "missing_thresholds",
            Error::MisalignedBlocks(_) => "misaligned_blocks",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
