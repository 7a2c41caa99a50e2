use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::ImbalanceRatio;
use crate::detection::Threshold;
use crate::error::{Error, Result};
use crate::evaluation::ReportRow;
use crate::stats::{friedman, wtl_matrix, ScoreTable, StatTestResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareOptions {
    pub alpha: f64,
    /// Threshold to compare at; the majority vote of each row's pool when
    /// absent.
    pub threshold_t: Option<usize>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            alpha: 0.05,
            threshold_t: None,
        }
    }
}

/// Friedman test over noise models, one block per (dataset, IR, p).
#[derive(Clone, Debug, PartialEq)]
pub struct FriedmanSummary {
    pub treatments: Vec<String>,
    pub blocks: usize,
    pub result: StatTestResult,
}

/// One Wilcoxon cell, column treatment against row treatment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub row_model: String,
    pub col_model: String,
    pub row_ir: ImbalanceRatio,
    pub col_ir: ImbalanceRatio,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub p_value: f64,
    #[serde(with = "flag01")]
    pub significant: bool,
}

mod flag01 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(u8::deserialize(d)? != 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub friedman: Option<FriedmanSummary>,
    pub pairwise: Vec<PairwiseRow>,
}

/// Distinct values in first-appearance order.
fn distinct<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

struct Cell {
    dataset: String,
    ir: ImbalanceRatio,
    model: String,
    p: f64,
    fscore: f64,
}

/// Builds a blocks × treatments table, failing on any missing cell.
fn table<B: PartialEq + Clone + std::fmt::Debug, T: PartialEq + Clone + std::fmt::Debug>(
    cells: &[Cell],
    block: impl Fn(&Cell) -> B,
    treatment: impl Fn(&Cell) -> T,
    label: impl Fn(&T) -> String,
) -> Result<(ScoreTable, Vec<T>)> {
    let blocks = distinct(cells.iter().map(&block));
    let treatments = distinct(cells.iter().map(&treatment));
    let mut values = vec![vec![None; treatments.len()]; blocks.len()];
    for c in cells {
        let b = blocks.iter().position(|x| *x == block(c)).expect("from cells");
        let t = treatments.iter().position(|x| *x == treatment(c)).expect("from cells");
        values[b][t] = Some(c.fscore);
    }
    let values = values
        .into_iter()
        .zip(&blocks)
        .map(|(row, b)| {
            row.into_iter()
                .zip(&treatments)
                .map(|(v, t)| v.ok_or_else(|| Error::MisalignedBlocks(format!("no score for {} on block {b:?}", label(t)))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let table = ScoreTable::new(
        blocks.iter().map(|b| format!("{b:?}")).collect(),
        treatments.iter().map(&label).collect(),
        values,
    )?;
    Ok((table, treatments))
}

/// Statistical comparison of noise models from report rows (possibly
/// concatenated from several report files).
///
/// The Friedman test ranks noise models within each (dataset, IR, p)
/// problem. The pairwise Wilcoxon table treats every (model, IR) pair as a
/// treatment and every (dataset, p) as a block. Exact duplicate rows are
/// merged; conflicting duplicates and incomplete blocks are errors.
pub fn compare(rows: &[ReportRow], options: CompareOptions) -> Result<Comparison> {
    let mut cells: Vec<Cell> = Vec::new();
    for r in rows {
        let t = options
            .threshold_t
            .unwrap_or_else(|| Threshold::majority(r.pool_size).t());
        if r.threshold_t != t {
            continue;
        }
        let model = r.model_label();
        let same = |c: &Cell| c.dataset == r.dataset && c.ir == r.ir && c.model == model && c.p == r.p;
        match cells.iter().find(|c| same(c)) {
            Some(c) if c.fscore == r.fscore_mean => continue,
            Some(_) => {
                return Err(Error::MisalignedBlocks(format!(
                    "conflicting scores for {} {} {model} p={}",
                    r.dataset, r.ir, r.p
                )))
            }
            None => cells.push(Cell {
                dataset: r.dataset.clone(),
                ir: r.ir,
                model,
                p: r.p,
                fscore: r.fscore_mean,
            }),
        }
    }
    if cells.is_empty() {
        return Err(Error::MisalignedBlocks("no report rows at the requested threshold".into()));
    }

    let (ftable, _) = table(
        &cells,
        |c| (c.dataset.clone(), c.ir, c.p.to_bits()),
        |c| c.model.clone(),
        |m| m.clone(),
    )?;
    let friedman = if ftable.blocks().len() >= 2 && ftable.treatments().len() >= 2 {
        Some(FriedmanSummary {
            treatments: ftable.treatments().to_vec(),
            blocks: ftable.blocks().len(),
            result: friedman(&ftable, options.alpha)?,
        })
    } else {
        None
    };

    let (ptable, treatments) = table(
        &cells,
        |c| (c.dataset.clone(), c.p.to_bits()),
        |c| (c.model.clone(), c.ir),
        |(m, ir)| format!("{m} {ir}"),
    )?;
    let pairwise = if treatments.len() >= 2 {
        wtl_matrix(&ptable, options.alpha)?
            .into_iter()
            .map(|cell| {
                let wtl = cell.result.wtl.expect("wilcoxon result");
                PairwiseRow {
                    row_model: treatments[cell.row].0.clone(),
                    col_model: treatments[cell.col].0.clone(),
                    row_ir: treatments[cell.row].1,
                    col_ir: treatments[cell.col].1,
                    wins: wtl.wins,
                    ties: wtl.ties,
                    losses: wtl.losses,
                    p_value: cell.result.p_value,
                    significant: cell.result.significant,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Comparison { friedman, pairwise })
}

/// Columns: `row_model, col_model, row_ir, col_ir, wins, ties, losses, p_value, significant`.
pub fn write_pairwise_csv<W: Write>(rows: &[PairwiseRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<pairwise writer>", e))?;
    Ok(())
}

/// Columns: `treatments, blocks, statistic, df, p_value, alpha, significant`.
pub fn write_friedman_csv<W: Write>(summary: Option<&FriedmanSummary>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["treatments", "blocks", "statistic", "df", "p_value", "alpha", "significant"])?;
    if let Some(s) = summary {
        let r = &s.result;
        w.write_record([
            s.treatments.join(";"),
            s.blocks.to_string(),
            r.statistic.to_string(),
            (s.treatments.len() - 1).to_string(),
            r.p_value.to_string(),
            r.alpha.to_string(),
            u8::from(r.significant).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<friedman writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dataset: &str, model: &str, m: &str, f: f64) -> ReportRow {
        ReportRow {
            dataset: dataset.into(),
            ir: "20:80".parse().unwrap(),
            model: model.into(),
            m: m.into(),
            p: 0.1,
            threshold_t: 6,
            pool_size: 10,
            repetitions: 5,
            precision_mean: f,
            precision_sd: 0.0,
            recall_mean: f,
            recall_sd: 0.0,
            fscore_mean: f,
            fscore_sd: 0.0,
        }
    }

    fn three_models(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<ReportRow> {
        (0..n)
            .flat_map(|b| {
                let d = format!("ds{b}");
                vec![
                    row(&d, "NCAR", "1:1", f(b, 0)),
                    row(&d, "NAR", "9:1", f(b, 1)),
                    row(&d, "NAR", "1:9", f(b, 2)),
                ]
            })
            .collect()
    }

    #[test]
    fn nineteen_blocks_three_models() {
        let rows = three_models(19, |b, j| 0.5 + 0.01 * b as f64 + 0.05 * j as f64);
        let c = compare(&rows, CompareOptions::default()).unwrap();
        let fr = c.friedman.unwrap();
        assert_eq!(fr.blocks, 19);
        assert_eq!(fr.treatments, vec!["NCAR", "NAR(9:1)", "NAR(1:9)"]);
        assert!(fr.result.significant);
        assert_eq!(c.pairwise.len(), 3);
        let first = &c.pairwise[0];
        assert_eq!((first.row_model.as_str(), first.col_model.as_str()), ("NCAR", "NAR(9:1)"));
        assert_eq!((first.wins, first.ties, first.losses), (19, 0, 0));
        assert_eq!(first.p_value, 2.0 / 2f64.powi(19));
    }

    #[test]
    fn identical_models_tie_everywhere() {
        let rows = three_models(19, |b, _| 0.3 + 0.01 * b as f64);
        let c = compare(&rows, CompareOptions::default()).unwrap();
        assert!(!c.friedman.unwrap().result.significant);
        assert!(c.pairwise.iter().all(|p| p.ties == 19 && !p.significant && p.p_value == 1.0));
    }

    #[test]
    fn duplicates_merge_and_gaps_fail() {
        let mut rows = three_models(4, |b, j| (b + j) as f64 / 10.0);
        rows.extend(three_models(4, |b, j| (b + j) as f64 / 10.0));
        assert_eq!(compare(&rows, CompareOptions::default()).unwrap().pairwise.len(), 3);
        rows.pop();
        rows.pop();
        rows.pop();
        rows.push(row("ds9", "NCAR", "1:1", 0.1));
        assert!(matches!(compare(&rows, CompareOptions::default()), Err(Error::MisalignedBlocks(_))));
        let mut clash = three_models(3, |_, _| 0.2);
        clash.push(row("ds0", "NCAR", "1:1", 0.9));
        assert!(compare(&clash, CompareOptions::default()).is_err());
    }

    #[test]
    fn pairwise_csv_layout() {
        let rows = three_models(3, |b, j| (b * 3 + j) as f64 / 10.0);
        let c = compare(&rows, CompareOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_pairwise_csv(&c.pairwise, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row_model,col_model,row_ir,col_ir,wins,ties,losses,p_value,significant\n"));
        assert!(text.contains("NCAR,NAR(9:1),20:80,20:80,3,0,0,0.25,0\n"));
    }
}
