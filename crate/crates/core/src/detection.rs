//! Ensemble noise detection: vote counting, threshold flagging and
//! cross-validated consensus cleaning.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ClassifierSpec, Pool};
use crate::data::{Class, Dataset};
use crate::error::{Error, Result};
use crate::seed;

/// Predictions of one pool member on the evaluated instances, id order.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberPredictions {
    pub spec: ClassifierSpec,
    pub labels: Vec<Class>,
    /// Ids predicted by the fallback because of unseen categorical levels.
    pub unseen: Vec<u64>,
}

/// Raw pool output, independent of the labels it will be compared with.
///
/// Fitting is the expensive part of detection; keeping predictions apart
/// from the observed labels lets one fitted pool be re-tallied against many
/// noisy copies of the same instances.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolPredictions {
    ids: Vec<u64>,
    members: Vec<MemberPredictions>,
}

impl PoolPredictions {
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn members(&self) -> &[MemberPredictions] {
        &self.members
    }

    /// Counts, per instance, the members disagreeing with `observed`'s label.
    pub fn tally(&self, observed: &Dataset) -> Result<VoteMatrix> {
        if !observed.ids().eq(self.ids.iter().copied()) {
            return Err(Error::IdMismatch(format!(
                "predictions cover {} instances, labelled dataset has {} with different ids",
                self.ids.len(),
                observed.len()
            )));
        }
        let labels = observed.labels();
        let counts = (0..self.ids.len())
            .map(|r| self.members.iter().filter(|m| m.labels[r] != labels[r]).count())
            .collect();
        Ok(VoteMatrix {
            pool_size: self.members.len(),
            ids: self.ids.clone(),
            counts,
            observed: labels,
            predictions: self.members.iter().map(|m| m.labels.clone()).collect(),
        })
    }
}

/// Per-instance misclassification counts of an `N`-member pool.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteMatrix {
    pool_size: usize,
    ids: Vec<u64>,
    counts: Vec<usize>,
    observed: Vec<Class>,
    /// `predictions[member][row]`; empty for matrices built from counts.
    predictions: Vec<Vec<Class>>,
}

impl VoteMatrix {
    /// A matrix from bare counts, without a prediction record. Rows are
    /// sorted by id; observed labels are recorded as negative.
    pub fn from_counts(pool_size: usize, counts: impl IntoIterator<Item = (u64, usize)>) -> Result<Self> {
        let mut rows: Vec<(u64, usize)> = counts.into_iter().collect();
        rows.sort_unstable();
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate id in vote counts".into()));
        }
        if let Some(&(id, c)) = rows.iter().find(|r| r.1 > pool_size) {
            return Err(Error::InvalidParameter(format!(
                "instance {id} has {c} votes but the pool has {pool_size} members"
            )));
        }
        Ok(VoteMatrix {
            pool_size,
            observed: vec![Class::Negative; rows.len()],
            ids: rows.iter().map(|r| r.0).collect(),
            counts: rows.into_iter().map(|r| r.1).collect(),
            predictions: Vec::new(),
        })
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn observed(&self) -> &[Class] {
        &self.observed
    }

    pub fn count(&self, id: u64) -> Option<usize> {
        self.ids.binary_search(&id).ok().map(|r| self.counts[r])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.ids.iter().copied().zip(self.counts.iter().copied())
    }

    pub fn member_predictions(&self) -> &[Vec<Class>] {
        &self.predictions
    }
}

/// Minimum misclassification count `t` at which an instance is flagged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold {
    t: usize,
}

impl Threshold {
    pub fn new(t: usize, pool_size: usize) -> Result<Self> {
        if t == 0 || t > pool_size {
            return Err(Error::InvalidThreshold { t, pool_size });
        }
        Ok(Threshold { t })
    }

    /// More than half of the pool: `floor(N / 2) + 1`.
    pub fn majority(pool_size: usize) -> Self {
        Threshold { t: pool_size / 2 + 1 }
    }

    /// The whole pool.
    pub fn consensus(pool_size: usize) -> Self {
        Threshold { t: pool_size.max(1) }
    }

    /// `t = round(level * N)` for a fraction `level` in `(0, 1]`.
    pub fn from_percentage(level: f64, pool_size: usize) -> Result<Self> {
        if !(level > 0.0 && level <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold level {level} outside (0, 1]"
            )));
        }
        let t = (level * pool_size as f64 + 0.5 + crate::data::COUNT_EPS).floor() as usize;
        Threshold::new(t, pool_size)
    }

    /// Every threshold `1..=N`.
    pub fn all(pool_size: usize) -> impl Iterator<Item = Threshold> {
        (1..=pool_size).map(|t| Threshold { t })
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}", self.t)
    }
}

/// A threshold as written in configs and on the command line, before the
/// pool size is known: `6`, `majority`, `consensus` or `30%`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdSpec {
    Count(usize),
    Majority,
    Consensus,
    Percent(f64),
}

impl ThresholdSpec {
    pub fn resolve(&self, pool_size: usize) -> Result<Threshold> {
        match *self {
            ThresholdSpec::Count(t) => Threshold::new(t, pool_size),
            ThresholdSpec::Majority => Ok(Threshold::majority(pool_size)),
            ThresholdSpec::Consensus => Ok(Threshold::consensus(pool_size)),
            ThresholdSpec::Percent(pct) => Threshold::from_percentage(pct / 100.0, pool_size),
        }
    }
}

impl fmt::Display for ThresholdSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdSpec::Count(t) => write!(f, "{t}"),
            ThresholdSpec::Majority => f.write_str("majority"),
            ThresholdSpec::Consensus => f.write_str("consensus"),
            ThresholdSpec::Percent(p) => write!(f, "{p}%"),
        }
    }
}

impl FromStr for ThresholdSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse threshold `{s}`"));
        if s.eq_ignore_ascii_case("majority") {
            Ok(ThresholdSpec::Majority)
        } else if s.eq_ignore_ascii_case("consensus") {
            Ok(ThresholdSpec::Consensus)
        } else if let Some(pct) = s.strip_suffix('%') {
            pct.trim().parse().map(ThresholdSpec::Percent).map_err(|_| bad())
        } else {
            s.parse().map(ThresholdSpec::Count).map_err(|_| bad())
        }
    }
}

impl Serialize for ThresholdSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ThresholdSpec::Count(t) => s.serialize_u64(*t as u64),
            other => s.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(t) => Ok(ThresholdSpec::Count(t as usize)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Instances flagged as mislabelled at one threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult<'v> {
    pub threshold: Threshold,
    pub flagged: BTreeSet<u64>,
    pub votes: &'v VoteMatrix,
}

impl DetectionResult<'_> {
    /// Columns: `id, vote_count, flagged, threshold_t, pool_size`.
    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "vote_count", "flagged", "threshold_t", "pool_size"])?;
        let (t, n) = (self.threshold.t.to_string(), self.votes.pool_size.to_string());
        for (id, count) in self.votes.iter() {
            let flag = if self.flagged.contains(&id) { "1" } else { "0" };
            w.write_record([&id.to_string(), &count.to_string(), flag, &t, &n])?;
        }
        w.flush().map_err(|e| Error::io("<detection writer>", e))?;
        Ok(())
    }
}

/// Flags every instance with at least `t` misclassifying members.
pub fn flag(votes: &VoteMatrix, threshold: Threshold) -> Result<DetectionResult<'_>> {
    if threshold.t == 0 || threshold.t > votes.pool_size {
        return Err(Error::InvalidThreshold {
            t: threshold.t,
            pool_size: votes.pool_size,
        });
    }
    let flagged = votes
        .iter()
        .filter(|&(_, c)| c >= threshold.t)
        .map(|(id, _)| id)
        .collect();
    Ok(DetectionResult {
        threshold,
        flagged,
        votes,
    })
}

/// Fits every pool member on `train` and predicts `evaluate`.
///
/// Member `i` is trained with seed `derive(seed, [i])`. Members run in
/// parallel; results are kept in pool order.
pub fn predict_pool(pool: &Pool, train: &Dataset, evaluate: &Dataset, seed: u64) -> Result<PoolPredictions> {
    if train.schema().fingerprint() != evaluate.schema().fingerprint() {
        return Err(Error::SchemaMismatch(
            "training and evaluated datasets have different schemas".into(),
        ));
    }
    let members = pool
        .members()
        .par_iter()
        .enumerate()
        .map(|(index, spec)| {
            let member = |e| Error::Member {
                index,
                kind: spec.learner.to_string(),
                source: Box::new(e),
            };
            let model = classifiers::fit(spec, train, seed::derive(seed, &[index as u64])).map_err(member)?;
            let out = classifiers::predict(&model, evaluate).map_err(member)?;
            Ok(MemberPredictions {
                spec: spec.clone(),
                labels: out.labels,
                unseen: out.unseen,
            })
        })
        .collect::<Vec<Result<_>>>()
        // Sequential collect so the reported error is the lowest-index one.
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(PoolPredictions {
        ids: evaluate.ids().collect(),
        members,
    })
}

/// [`predict_pool`] followed by a tally against `evaluate`'s own labels.
pub fn build_votes(pool: &Pool, train: &Dataset, evaluate: &Dataset, seed: u64) -> Result<VoteMatrix> {
    predict_pool(pool, train, evaluate, seed)?.tally(evaluate)
}

/// Outcome of consensus cleaning.
#[derive(Clone, Debug)]
pub struct Cleaning {
    pub cleaned: Dataset,
    pub removed: BTreeSet<u64>,
    /// Out-of-fold votes for every input instance.
    pub votes: VoteMatrix,
}

/// Stratified fold index per instance (id order). Each class is shuffled and
/// dealt round-robin into `folds` folds.
pub fn stratified_folds(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = seed::rng(seed);
    let mut assignment = vec![0; data.len()];
    for class in Class::BOTH {
        let mut rows: Vec<usize> = (0..data.len())
            .filter(|&r| data.instances()[r].label == class)
            .collect();
        if rows.len() < folds {
            return Err(Error::InvalidDataset(format!(
                "class `{}` has {} instances, fewer than {folds} folds",
                data.schema().label_value(class),
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        for (k, r) in rows.into_iter().enumerate() {
            assignment[r] = k % folds;
        }
    }
    Ok(assignment)
}

/// One pass of cross-validated consensus filtering: each fold is voted on
/// by the pool trained on the remaining folds, and instances misclassified
/// by every member are removed.
pub fn clean_consensus(data: &Dataset, pool: &Pool, folds: usize, seed: u64) -> Result<Cleaning> {
    let assignment = stratified_folds(data, folds, seed::derive(seed, &[0]))?;
    let n = data.len();
    let mut counts = vec![0; n];
    let mut predictions = vec![vec![Class::Negative; n]; pool.len()];
    for fold in 0..folds {
        let held: BTreeSet<u64> = data
            .instances()
            .iter()
            .zip(&assignment)
            .filter(|&(_, &f)| f == fold)
            .map(|(i, _)| i.id)
            .collect();
        let (train, test) = (data.without(&held), data.select(&held));
        let votes = build_votes(pool, &train, &test, seed::derive(seed, &[1, fold as u64]))?;
        // Held-out rows are an id-ordered subsequence of the full dataset.
        let rows = (0..n).filter(|&r| assignment[r] == fold);
        for (j, r) in rows.enumerate() {
            counts[r] = votes.counts[j];
            for (m, preds) in votes.predictions.iter().enumerate() {
                predictions[m][r] = preds[j];
            }
        }
    }
    let votes = VoteMatrix {
        pool_size: pool.len(),
        ids: data.ids().collect(),
        counts,
        observed: data.labels(),
        predictions,
    };
    let removed = flag(&votes, Threshold::consensus(pool.len()))?.flagged;
    Ok(Cleaning {
        cleaned: data.without(&removed),
        removed,
        votes,
    })
}
