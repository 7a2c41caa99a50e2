use serde::{Deserialize, Serialize};

use crate::data::ImbalanceRatio;
use crate::error::{Error, Result};
use crate::evaluation::ReportRow;

/// Mean F-score of one cell at one threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub dataset: String,
    pub ir: ImbalanceRatio,
    pub model: String,
    pub m: String,
    pub p: f64,
    pub pool_size: usize,
    pub threshold_t: usize,
    pub fscore_mean: f64,
}

/// Best threshold of one cell; ties go to the lowest `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePeak {
    pub dataset: String,
    pub ir: ImbalanceRatio,
    pub model: String,
    pub m: String,
    pub p: f64,
    pub pool_size: usize,
    pub best_t: usize,
    pub best_fscore: f64,
}

impl CurvePeak {
    pub fn model_label(&self) -> String {
        if self.model.eq_ignore_ascii_case("ncar") {
            "NCAR".into()
        } else {
            format!("{}({})", self.model, self.m)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curves {
    pub points: Vec<CurvePoint>,
    pub peaks: Vec<CurvePeak>,
}

type CellKey = (String, ImbalanceRatio, String, String, u64, usize);

fn cell_key(r: &ReportRow) -> CellKey {
    (r.dataset.clone(), r.ir, r.model.clone(), r.m.clone(), r.p.to_bits(), r.pool_size)
}

/// F-score against threshold per cell, in the order cells first appear.
/// Each cell must hold every threshold `1..=N` exactly once.
pub fn emit_threshold_curves(rows: &[ReportRow]) -> Result<Curves> {
    let mut cells: Vec<(CellKey, Vec<&ReportRow>)> = Vec::new();
    for r in rows {
        let key = cell_key(r);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => cells.push((key, vec![r])),
        }
    }
    let mut points = Vec::new();
    let mut peaks = Vec::new();
    for (_, mut group) in cells {
        group.sort_by_key(|r| r.threshold_t);
        let first = group[0];
        let n = first.pool_size;
        let present: Vec<usize> = group.iter().map(|r| r.threshold_t).collect();
        let missing: Vec<usize> = (1..=n).filter(|t| !present.contains(t)).collect();
        if !missing.is_empty() || present.len() != n {
            return Err(Error::MissingThresholds {
                cell: format!("{} {} {}({}) p={}", first.dataset, first.ir, first.model, first.m, first.p),
                missing,
            });
        }
        let mut best = first;
        for r in &group {
            if r.fscore_mean > best.fscore_mean {
                best = r;
            }
        }
        peaks.push(CurvePeak {
            dataset: first.dataset.clone(),
            ir: first.ir,
            model: first.model.clone(),
            m: first.m.clone(),
            p: first.p,
            pool_size: n,
            best_t: best.threshold_t,
            best_fscore: best.fscore_mean,
        });
        points.extend(group.iter().map(|r| CurvePoint {
            dataset: r.dataset.clone(),
            ir: r.ir,
            model: r.model.clone(),
            m: r.m.clone(),
            p: r.p,
            pool_size: n,
            threshold_t: r.threshold_t,
            fscore_mean: r.fscore_mean,
        }));
    }
    Ok(Curves { points, peaks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, t: usize, f: f64) -> ReportRow {
        ReportRow {
            dataset: "d".into(),
            ir: ImbalanceRatio::BALANCED,
            model: model.into(),
            m: "1:1".into(),
            p: 0.1,
            threshold_t: t,
            pool_size: 4,
            repetitions: 1,
            precision_mean: f,
            precision_sd: 0.0,
            recall_mean: f,
            recall_sd: 0.0,
            fscore_mean: f,
            fscore_sd: 0.0,
        }
    }

    #[test]
    fn peak_and_lowest_tie() {
        let rows: Vec<ReportRow> = [0.2, 0.5, 0.7, 0.4]
            .iter()
            .enumerate()
            .map(|(i, &f)| row("NCAR", i + 1, f))
            .chain([0.6, 0.6, 0.3, 0.1].iter().enumerate().map(|(i, &f)| row("NAR", 4 - i, f)))
            .collect();
        let c = emit_threshold_curves(&rows).unwrap();
        assert_eq!(c.points.len(), 8);
        assert_eq!(c.peaks.len(), 2);
        assert_eq!(c.peaks[0].best_t, 3);
        // NAR rows were given in reverse t order: t=4 -> 0.6, t=3 -> 0.6.
        assert_eq!(c.peaks[1].best_t, 3);
        assert_eq!(c.points[4].threshold_t, 1);
    }

    #[test]
    fn missing_thresholds_are_reported() {
        let rows = vec![row("NCAR", 1, 0.1), row("NCAR", 3, 0.1), row("NCAR", 4, 0.1)];
        match emit_threshold_curves(&rows) {
            Err(Error::MissingThresholds { missing, .. }) => assert_eq!(missing, vec![2]),
            other => panic!("{other:?}"),
        }
    }
}
