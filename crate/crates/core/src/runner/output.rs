use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::curves::{CurvePeak, CurvePoint, Curves};
use super::experiment::{ExperimentOutput, RunRecord, RunStatus};
use crate::data::ImbalanceRatio;
use crate::error::{Error, Result};
use crate::evaluation::{read_report_csv, write_report_csv, ReportRow};

#[derive(Serialize)]
struct RunRow<'a> {
    dataset: &'a str,
    ir: ImbalanceRatio,
    model: &'static str,
    m: String,
    p: f64,
    repetition: usize,
    seed: u64,
    test_size: usize,
    status: &'static str,
    threshold_t: Option<usize>,
    tp: Option<usize>,
    fp: Option<usize>,
    #[serde(rename = "fn")]
    fn_: Option<usize>,
    minority_tp: Option<usize>,
    minority_fp: Option<usize>,
    minority_fn: Option<usize>,
    precision: Option<f64>,
    recall: Option<f64>,
    fscore: Option<f64>,
    detail: &'a str,
}

/// One line per (run, threshold); infeasible runs get a single line with
/// `status = infeasible` and the reason in `detail`.
pub fn write_runs_csv<W: Write>(runs: &[RunRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in runs {
        let base = RunRow {
            dataset: &r.dataset,
            ir: r.ir,
            model: r.model.family(),
            m: r.model.ratio().to_string(),
            p: r.p,
            repetition: r.repetition,
            seed: r.seed,
            test_size: r.test_size,
            status: "infeasible",
            threshold_t: None,
            tp: None,
            fp: None,
            fn_: None,
            minority_tp: None,
            minority_fp: None,
            minority_fn: None,
            precision: None,
            recall: None,
            fscore: None,
            detail: "",
        };
        match &r.status {
            RunStatus::Infeasible(msg) => w.serialize(RunRow { detail: msg, ..base })?,
            RunStatus::Scored(outcomes) => {
                for o in outcomes {
                    let min = o.counts.minority_counts();
                    w.serialize(RunRow {
                        status: "ok",
                        threshold_t: Some(o.threshold.t()),
                        tp: Some(o.counts.tp),
                        fp: Some(o.counts.fp),
                        fn_: Some(o.counts.fn_),
                        minority_tp: Some(min.tp),
                        minority_fp: Some(min.fp),
                        minority_fn: Some(min.fn_),
                        precision: Some(o.scores.precision),
                        recall: Some(o.scores.recall),
                        fscore: Some(o.scores.fscore),
                        m: base.m.clone(),
                        ..base
                    })?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io("<runs writer>", e))?;
    Ok(())
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Writes `curves.csv`-style rows and `curve_peaks.csv`-style rows.
pub fn write_curves_csv<W1: Write, W2: Write>(curves: &Curves, points: W1, peaks: W2) -> Result<()> {
    write_rows::<_, CurvePoint>(&curves.points, points)?;
    write_rows::<_, CurvePeak>(&curves.peaks, peaks)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes `report.csv`, `runs.csv`, `removed_ids.csv` and, for full
/// threshold grids, `curves.csv` and `curve_peaks.csv` into `dir`.
pub fn write_experiment(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join("report.csv");
    write_report_csv(&out.report_rows(), create(&path)?)?;
    written.push(path);

    let path = dir.join("runs.csv");
    write_runs_csv(&out.runs, create(&path)?)?;
    written.push(path);

    let path = dir.join("removed_ids.csv");
    let mut w = create(&path)?;
    writeln!(w, "id").and_then(|_| out.cleaned_away.iter().try_for_each(|id| writeln!(w, "{id}")))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    written.push(path);

    if let Some(curves) = &out.curves {
        let (a, b) = (dir.join("curves.csv"), dir.join("curve_peaks.csv"));
        write_curves_csv(curves, create(&a)?, create(&b)?)?;
        written.extend([a, b]);
    }
    Ok(written)
}

/// Concatenates report CSV files.
pub fn read_reports(paths: &[PathBuf]) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for p in paths {
        let f = File::open(p).map_err(|e| Error::io(p, e))?;
        rows.extend(read_report_csv(f)?);
    }
    Ok(rows)
}
