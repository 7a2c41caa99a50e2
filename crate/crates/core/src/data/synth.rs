use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Class, Dataset, Feature, Instance, Schema, Value};
use crate::error::{Error, Result};
use crate::seed;

/// Two unit-variance spherical Gaussian clusters whose means sit at
/// `-separation / 2` (negative) and `+separation / 2` (positive) on the
/// first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub positives: usize,
    pub negatives: usize,
    pub dims: usize,
    pub separation: f64,
}

pub fn generate_synthetic(params: &SyntheticParams, seed: u64) -> Result<Dataset> {
    if params.dims == 0 {
        return Err(Error::InvalidParameter("dims must be >= 1".into()));
    }
    if params.positives < 2 || params.negatives < 2 {
        return Err(Error::InvalidParameter(
            "each class needs at least 2 instances".into(),
        ));
    }
    if !params.separation.is_finite() || params.separation < 0.0 {
        return Err(Error::InvalidParameter(
            "separation must be finite and non-negative".into(),
        ));
    }
    let features = (0..params.dims).map(|d| Feature::numeric(format!("x{d}"))).collect();
    let schema = Arc::new(Schema::new(features, "label", "neg", "pos")?);
    let mut rng = seed::rng(seed);
    let mut instances = Vec::with_capacity(params.positives + params.negatives);
    let half = params.separation / 2.0;
    let classes = std::iter::repeat_n(Class::Positive, params.positives)
        .chain(std::iter::repeat_n(Class::Negative, params.negatives));
    for (id, label) in classes.enumerate() {
        let shift = if label == Class::Positive { half } else { -half };
        let values = (0..params.dims)
            .map(|d| {
                let z: f64 = rng.sample(StandardNormal);
                Value::Numeric(if d == 0 { z + shift } else { z })
            })
            .collect();
        instances.push(Instance {
            id: id as u64,
            values,
            label,
        });
    }
    Ok(Dataset::from_parts(schema, instances))
}
