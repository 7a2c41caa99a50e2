//! Natively implemented binary classifiers with a uniform fit/predict
//! contract, and the fixed ten-member pool used for ensemble filtering.
//!
//! The pool spans instance-based, Bayesian, tree, tree-ensemble and linear
//! families. All learners work on the encoded matrix (standardized numeric
//! columns, one-hot categorical columns), with encoding statistics taken
//! from the training set only.

mod bayes;
mod centroid;
mod knn;
mod linear;
mod tree;

use std::fmt;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::{Class, Dataset, Encoder, SchemaFingerprint};
use crate::error::{Error, Result};
use crate::seed;

pub use tree::SplitCriterion;

fn default_lr() -> f64 {
    0.1
}
fn default_iterations() -> usize {
    500
}
fn default_l2() -> f64 {
    1e-3
}
fn default_epochs() -> usize {
    10
}
fn default_perceptron_rate() -> f64 {
    1.0
}
fn default_depth() -> usize {
    12
}
fn default_trees() -> usize {
    25
}

/// A learner family and its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Learner {
    Knn {
        k: usize,
    },
    GaussianNb,
    DecisionTree {
        #[serde(default)]
        criterion: SplitCriterion,
        #[serde(default = "default_depth")]
        max_depth: usize,
    },
    RandomForest {
        #[serde(default = "default_trees")]
        trees: usize,
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default)]
        criterion: SplitCriterion,
    },
    /// Full-batch gradient descent on the L2-regularized log loss, run for
    /// a fixed number of iterations.
    LogisticRegression {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_l2")]
        l2: f64,
    },
    /// Averaged single-layer perceptron.
    Perceptron {
        #[serde(default = "default_epochs")]
        epochs: usize,
        #[serde(default = "default_perceptron_rate")]
        learning_rate: f64,
    },
    NearestCentroid,
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Learner::Knn { k } => write!(f, "knn(k={k})"),
            Learner::GaussianNb => write!(f, "gaussian-nb"),
            Learner::DecisionTree {
                criterion,
                max_depth,
            } => write!(f, "decision-tree({criterion}, depth {max_depth})"),
            Learner::RandomForest {
                trees, max_depth, ..
            } => write!(f, "random-forest({trees} trees, depth {max_depth})"),
            Learner::LogisticRegression { l2, .. } => write!(f, "logistic-regression(l2={l2})"),
            Learner::Perceptron { epochs, .. } => write!(f, "perceptron({epochs} epochs)"),
            Learner::NearestCentroid => write!(f, "nearest-centroid"),
        }
    }
}

/// One pool entry: a learner plus an offset mixed into its training seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub learner: Learner,
    #[serde(default)]
    pub seed_offset: u64,
}

impl ClassifierSpec {
    pub fn new(learner: Learner) -> Self {
        ClassifierSpec {
            learner,
            seed_offset: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("{}: {msg}", self.learner)));
        match self.learner {
            Learner::Knn { k } if k == 0 || k % 2 == 0 => bad(format!("k must be odd and >= 1, got {k}")),
            Learner::DecisionTree { max_depth: 0, .. } | Learner::RandomForest { max_depth: 0, .. } => {
                bad("depth must be >= 1".into())
            }
            Learner::RandomForest { trees: 0, .. } => bad("tree count must be >= 1".into()),
            Learner::LogisticRegression {
                learning_rate,
                iterations,
                l2,
            } if iterations == 0 || !(learning_rate > 0.0) || !(l2 >= 0.0) => {
                bad("needs iterations >= 1, learning rate > 0, l2 >= 0".into())
            }
            Learner::Perceptron {
                epochs,
                learning_rate,
            } if epochs == 0 || !(learning_rate > 0.0) => bad("needs epochs >= 1 and learning rate > 0".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.learner.fmt(f)
    }
}

/// Ordered classifier pool. Vote thresholds count misclassifications out
/// of `len()`, so member order and size are fixed at construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassifierSpec>", into = "Vec<ClassifierSpec>")]
pub struct Pool {
    members: Vec<ClassifierSpec>,
}

impl Pool {
    pub fn new(members: Vec<ClassifierSpec>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a pool needs at least 2 members, got {}",
                members.len()
            )));
        }
        for m in &members {
            m.validate()?;
        }
        Ok(Pool { members })
    }

    pub fn members(&self) -> &[ClassifierSpec] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl TryFrom<Vec<ClassifierSpec>> for Pool {
    type Error = Error;
    fn try_from(v: Vec<ClassifierSpec>) -> Result<Self> {
        Pool::new(v)
    }
}

impl From<Pool> for Vec<ClassifierSpec> {
    fn from(p: Pool) -> Self {
        p.members
    }
}

impl Default for Pool {
    fn default() -> Self {
        default_pool()
    }
}

/// The fixed ten-member pool.
pub fn default_pool() -> Pool {
    use Learner::*;
    let members = [
        Knn { k: 1 },
        Knn { k: 5 },
        GaussianNb,
        DecisionTree {
            criterion: SplitCriterion::Gini,
            max_depth: 12,
        },
        DecisionTree {
            criterion: SplitCriterion::Entropy,
            max_depth: 5,
        },
        RandomForest {
            trees: 25,
            max_depth: 12,
            criterion: SplitCriterion::Gini,
        },
        LogisticRegression {
            learning_rate: 0.1,
            iterations: 500,
            l2: 1e-3,
        },
        Perceptron {
            epochs: 10,
            learning_rate: 1.0,
        },
        NearestCentroid,
        RandomForest {
            trees: 50,
            max_depth: 6,
            criterion: SplitCriterion::Gini,
        },
    ];
    Pool {
        members: members.into_iter().map(ClassifierSpec::new).collect(),
    }
}

#[derive(Clone, Debug)]
enum Params {
    Knn(knn::Knn),
    Bayes(bayes::GaussianNb),
    Tree(tree::Tree),
    Forest(tree::Forest),
    Linear(linear::LinearModel),
    Centroid(centroid::NearestCentroid),
}

/// A fitted classifier. Immutable; predicts only on datasets whose schema
/// fingerprint matches the training set.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    spec: ClassifierSpec,
    encoder: Encoder,
    fallback: Class,
    params: Params,
}

/// Labels in id order plus ids that were predicted by the majority-class
/// fallback because they carried an unseen categorical level.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub labels: Vec<Class>,
    pub unseen: Vec<u64>,
}

impl TrainedModel {
    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn fingerprint(&self) -> SchemaFingerprint {
        self.encoder.fingerprint()
    }

    pub(crate) fn predict_matrix(&self, x: &Array2<f64>) -> Vec<Class> {
        x.rows()
            .into_iter()
            .map(|r| self.predict_row(r).unwrap_or(self.fallback))
            .collect()
    }

    fn predict_row(&self, row: ArrayView1<f64>) -> Option<Class> {
        match &self.params {
            Params::Knn(m) => m.predict_row(row),
            Params::Bayes(m) => m.predict_row(row),
            Params::Tree(m) => Some(m.predict_row(row)),
            Params::Forest(m) => m.predict_row(row),
            Params::Linear(m) => m.predict_row(row),
            Params::Centroid(m) => m.predict_row(row),
        }
    }
}

/// Fits `spec` on `train`. Deterministic in `(spec, train, seed)`.
pub fn fit(spec: &ClassifierSpec, train: &Dataset, seed: u64) -> Result<TrainedModel> {
    spec.validate()?;
    let counts = train.class_counts();
    if counts.negative == 0 || counts.positive == 0 {
        return Err(Error::InvalidDataset(
            "training data must contain both classes".into(),
        ));
    }
    let encoder = Encoder::fit(train);
    let x = encoder.transform(train)?.matrix;
    let y = train.labels();
    let fallback = counts.majority();
    let seed = seed::derive(seed, &[spec.seed_offset]);
    let params = match spec.learner {
        Learner::Knn { k } => Params::Knn(knn::Knn::fit(x, y, k)),
        Learner::GaussianNb => Params::Bayes(bayes::GaussianNb::fit(&x, &y)),
        Learner::DecisionTree {
            criterion,
            max_depth,
        } => Params::Tree(tree::Tree::fit(&x, &y, criterion, max_depth)),
        Learner::RandomForest {
            trees,
            max_depth,
            criterion,
        } => Params::Forest(tree::Forest::fit(&x, &y, criterion, max_depth, trees, seed)),
        Learner::LogisticRegression {
            learning_rate,
            iterations,
            l2,
        } => Params::Linear(linear::LinearModel::logistic(&x, &y, learning_rate, iterations, l2)),
        Learner::Perceptron {
            epochs,
            learning_rate,
        } => Params::Linear(linear::LinearModel::perceptron(&x, &y, epochs, learning_rate, seed)),
        Learner::NearestCentroid => Params::Centroid(centroid::NearestCentroid::fit(&x, &y)),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        encoder,
        fallback,
        params,
    })
}

/// Predicts one label per instance, in id order.
pub fn predict(model: &TrainedModel, instances: &Dataset) -> Result<Predictions> {
    let encoded = model.encoder.transform(instances)?;
    let mut labels = model.predict_matrix(&encoded.matrix);
    if !encoded.unseen.is_empty() {
        for (label, inst) in labels.iter_mut().zip(instances.instances()) {
            if encoded.unseen.binary_search(&inst.id).is_ok() {
                *label = model.fallback;
            }
        }
    }
    Ok(Predictions {
        labels,
        unseen: encoded.unseen,
    })
}

pub(crate) fn as_sign(c: Class) -> f64 {
    match c {
        Class::Positive => 1.0,
        Class::Negative => -1.0,
    }
}

/// Class from a real-valued score; an exact zero is left undecided.
pub(crate) fn from_score(z: f64) -> Option<Class> {
    if z > 0.0 {
        Some(Class::Positive)
    } else if z < 0.0 {
        Some(Class::Negative)
    } else {
        None
    }
}
