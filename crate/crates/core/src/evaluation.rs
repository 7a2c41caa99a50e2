//! Scoring detections against an injection ledger, and aggregating scores
//! over repetitions.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{Class, ImbalanceRatio};
use crate::detection::DetectionResult;
use crate::error::{Error, Result};
use crate::noise::{InjectionLedger, NoiseModel};

/// Detection outcome counts restricted to one true class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassConfusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Flagged-vs-flipped counts. "Positive" here means *flagged as noise*.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// The test set's minority class (by original labels).
    pub minority: Class,
    /// Breakdown by each instance's original class, indexed negative/positive.
    per_class: [ClassConfusion; 2],
}

impl ConfusionCounts {
    pub fn for_class(&self, class: Class) -> ClassConfusion {
        self.per_class[class as usize]
    }

    pub fn minority_counts(&self) -> ClassConfusion {
        self.for_class(self.minority)
    }

    pub fn majority_counts(&self) -> ClassConfusion {
        self.for_class(self.minority.flipped())
    }
}

/// Compares flagged ids with the ledger's flipped ids, per instance.
pub fn score(result: &DetectionResult<'_>, ledger: &InjectionLedger) -> Result<ConfusionCounts> {
    let entries = ledger.entries();
    if !entries.iter().map(|e| e.id).eq(result.votes.ids().iter().copied()) {
        return Err(Error::IdMismatch(
            "detection and ledger cover different instances".into(),
        ));
    }
    let mut per_class = [ClassConfusion::default(); 2];
    for e in entries {
        let c = &mut per_class[e.original as usize];
        match (result.flagged.contains(&e.id), e.flipped()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    let sum = |f: fn(&ClassConfusion) -> usize| per_class.iter().map(f).sum();
    Ok(ConfusionCounts {
        tp: sum(|c| c.tp),
        fp: sum(|c| c.fp),
        fn_: sum(|c| c.fn_),
        minority: ledger.minority(),
        per_class,
    })
}

/// Precision and recall, with both defined as 1 when their denominator is
/// empty (nothing flagged / nothing to find).
pub fn precision_recall(tp: usize, fp: usize, fn_: usize) -> (f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    (ratio(tp, tp + fp), ratio(tp, tp + fn_))
}

/// `F_beta = (1 + beta^2) P R / (beta^2 P + R)`, and 0 when `P = R = 0`.
pub fn f_score(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den <= 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

impl Scores {
    pub fn from_counts(counts: &ConfusionCounts, beta: f64) -> Scores {
        let (precision, recall) = precision_recall(counts.tp, counts.fp, counts.fn_);
        Scores {
            precision,
            recall,
            fscore: f_score(precision, recall, beta),
        }
    }
}

/// Identity of one aggregated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalKey {
    pub dataset: String,
    pub ir: ImbalanceRatio,
    pub model: NoiseModel,
    pub p: f64,
    pub threshold_t: usize,
    pub pool_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Summary { mean, sd }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub key: EvalKey,
    pub repetitions: Vec<Scores>,
    pub precision: Summary,
    pub recall: Summary,
    pub fscore: Summary,
}

/// Mean and sample sd of each metric over repetitions sharing one key.
pub fn aggregate(scores: &[(EvalKey, Scores)]) -> Result<EvalReport> {
    let Some((key, _)) = scores.first() else {
        return Err(Error::InvalidParameter("cannot aggregate zero repetitions".into()));
    };
    if scores.iter().any(|(k, _)| k != key) {
        return Err(Error::MixedKeys);
    }
    let metric = |f: fn(&Scores) -> f64| Summary::of(&scores.iter().map(|(_, s)| f(s)).collect::<Vec<_>>());
    Ok(EvalReport {
        key: key.clone(),
        repetitions: scores.iter().map(|(_, s)| *s).collect(),
        precision: metric(|s| s.precision),
        recall: metric(|s| s.recall),
        fscore: metric(|s| s.fscore),
    })
}

/// One line of a report CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub ir: ImbalanceRatio,
    /// `NCAR` or `NAR`.
    pub model: String,
    /// Noise ratio as `minority:majority`.
    pub m: String,
    pub p: f64,
    pub threshold_t: usize,
    pub pool_size: usize,
    pub repetitions: usize,
    pub precision_mean: f64,
    pub precision_sd: f64,
    pub recall_mean: f64,
    pub recall_sd: f64,
    pub fscore_mean: f64,
    pub fscore_sd: f64,
}

impl ReportRow {
    pub fn noise_model(&self) -> Result<NoiseModel> {
        if self.model.eq_ignore_ascii_case("ncar") {
            Ok(NoiseModel::Ncar)
        } else {
            Ok(NoiseModel::Nar(self.m.parse()?))
        }
    }

    /// Label of the noise model as shown in comparison tables.
    pub fn model_label(&self) -> String {
        match self.noise_model() {
            Ok(m) => m.to_string(),
            Err(_) => format!("{}({})", self.model, self.m),
        }
    }
}

impl From<&EvalReport> for ReportRow {
    fn from(r: &EvalReport) -> Self {
        ReportRow {
            dataset: r.key.dataset.clone(),
            ir: r.key.ir,
            model: r.key.model.family().to_string(),
            m: r.key.model.ratio().to_string(),
            p: r.key.p,
            threshold_t: r.key.threshold_t,
            pool_size: r.key.pool_size,
            repetitions: r.repetitions.len(),
            precision_mean: r.precision.mean,
            precision_sd: r.precision.sd,
            recall_mean: r.recall.mean,
            recall_sd: r.recall.sd,
            fscore_mean: r.fscore.mean,
            fscore_sd: r.fscore.sd,
        }
    }
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<report writer>", e))?;
    Ok(())
}

pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
