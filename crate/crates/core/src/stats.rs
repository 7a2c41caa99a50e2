//! Nonparametric comparison of detection scores: the Friedman test over
//! several treatments, the Wilcoxon signed-rank test for pairs, and
//! win/tie/loss tabulation.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of nonzero differences for which Wilcoxon p-values are
/// computed exactly rather than by the normal approximation.
pub const EXACT_LIMIT: usize = 25;

/// Scores laid out as blocks (problems) × treatments.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    blocks: Vec<String>,
    treatments: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl ScoreTable {
    /// `values[b][j]` is the score of treatment `j` on block `b`.
    pub fn new(blocks: Vec<String>, treatments: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != blocks.len() {
            return Err(Error::MisalignedBlocks(format!(
                "{} block labels for {} rows",
                blocks.len(),
                values.len()
            )));
        }
        if let Some((b, row)) = values.iter().enumerate().find(|(_, r)| r.len() != treatments.len()) {
            return Err(Error::MisalignedBlocks(format!(
                "block `{}` has {} scores, expected {}",
                blocks[b],
                row.len(),
                treatments.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("score table holds a non-finite value".into()));
        }
        Ok(ScoreTable {
            blocks,
            treatments,
            values,
        })
    }

    pub fn blocks(&self) -> &[String] {
        &self.blocks
    }

    pub fn treatments(&self) -> &[String] {
        &self.treatments
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestKind {
    Friedman,
    Wilcoxon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WinTieLoss {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatTestResult {
    pub kind: TestKind,
    /// Friedman chi-square, or Wilcoxon `W = min(W+, W-)`.
    pub statistic: f64,
    pub p_value: f64,
    /// Blocks (Friedman) or paired observations (Wilcoxon).
    pub n: usize,
    pub alpha: f64,
    pub significant: bool,
    /// Wilcoxon only.
    pub wtl: Option<WinTieLoss>,
    /// Wilcoxon only: sums of ranks of positive and negative differences.
    pub rank_sums: Option<(f64, f64)>,
}

/// Ascending ranks, averaging over ties (1-based).
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Friedman rank test. Higher scores get higher ranks (the statistic does
/// not depend on the direction).
pub fn friedman(table: &ScoreTable, alpha: f64) -> Result<StatTestResult> {
    check_alpha(alpha)?;
    let (n, k) = (table.blocks.len(), table.treatments.len());
    if n < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!(
            "Friedman test needs at least 2 blocks and 2 treatments, got {n}x{k}"
        )));
    }
    let mut mean_ranks = vec![0.0; k];
    for row in &table.values {
        for (j, r) in midranks(row).into_iter().enumerate() {
            mean_ranks[j] += r / n as f64;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let spread = mean_ranks.iter().map(|r| r * r).sum::<f64>() - kf * (kf + 1.0).powi(2) / 4.0;
    let statistic = (12.0 * nf / (kf * (kf + 1.0)) * spread).max(0.0);
    let p_value = ChiSquared::new(kf - 1.0)
        .expect("k >= 2")
        .sf(statistic)
        .clamp(0.0, 1.0);
    Ok(StatTestResult {
        kind: TestKind::Friedman,
        statistic,
        p_value,
        n,
        alpha,
        significant: p_value < alpha,
        wtl: None,
        rank_sums: None,
    })
}

fn nonzero(d: &[f64]) -> Vec<f64> {
    d.iter().copied().filter(|&x| x != 0.0).collect()
}

/// `(W+, W-)` for nonzero differences, using mid-ranks of `|d|`.
fn rank_sums(d: &[f64]) -> (f64, f64) {
    let ranks = midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    d.iter().zip(ranks).fold((0.0, 0.0), |(p, m), (&x, r)| {
        if x > 0.0 {
            (p + r, m)
        } else {
            (p, m + r)
        }
    })
}

/// Exact two-sided p-value of the signed-rank statistic for the nonzero
/// entries of `d`, from the null distribution of all `2^m` sign patterns.
///
/// Mid-ranks are multiples of 1/2, so the distribution is tabulated over
/// doubled ranks as integers.
pub fn exact_p_value(d: &[f64]) -> f64 {
    let d = nonzero(d);
    let m = d.len();
    if m == 0 {
        return 1.0;
    }
    let doubled: Vec<usize> = midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>())
        .into_iter()
        .map(|r| (2.0 * r).round() as usize)
        .collect();
    let (wp, wm) = rank_sums(&d);
    let w2 = (2.0 * wp.min(wm)).round() as usize;
    let total: usize = doubled.iter().sum();
    // ways[s] = number of sign patterns whose positive doubled-rank sum is s.
    let mut ways = vec![0u64; total + 1];
    ways[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            ways[s] += ways[s - r];
        }
    }
    let at_most: u64 = ways[..=w2].iter().sum();
    (2.0 * at_most as f64 / 2f64.powi(m as i32)).min(1.0)
}

/// Two-sided normal-approximation p-value with continuity and tie
/// corrections, for the nonzero entries of `d`.
pub fn normal_p_value(d: &[f64]) -> f64 {
    let d = nonzero(d);
    let m = d.len() as f64;
    if d.is_empty() {
        return 1.0;
    }
    let (wp, wm) = rank_sums(&d);
    let w = wp.min(wm);
    let mut abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let tie_term: f64 = abs
        .chunk_by(|a, b| a == b)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum();
    let mean = m * (m + 1.0) / 4.0;
    let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.sf(z)).min(1.0)
}

/// Paired signed-rank test on `d = x - y`. Wins count `x > y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alpha: f64) -> Result<StatTestResult> {
    check_alpha(alpha)?;
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::MisalignedBlocks(format!(
            "paired samples of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let wtl = WinTieLoss {
        wins: d.iter().filter(|&&v| v > 0.0).count(),
        ties: d.iter().filter(|&&v| v == 0.0).count(),
        losses: d.iter().filter(|&&v| v < 0.0).count(),
    };
    let nz = nonzero(&d);
    let (wp, wm) = rank_sums(&nz);
    let p_value = if nz.len() <= EXACT_LIMIT {
        exact_p_value(&nz)
    } else {
        normal_p_value(&nz)
    };
    Ok(StatTestResult {
        kind: TestKind::Wilcoxon,
        statistic: wp.min(wm),
        p_value,
        n: d.len(),
        alpha,
        significant: p_value < alpha,
        wtl: Some(wtl),
        rank_sums: Some((wp, wm)),
    })
}

/// One cell of a pairwise comparison: column treatment against row treatment.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseCell {
    pub row: usize,
    pub col: usize,
    pub result: StatTestResult,
}

/// Wilcoxon tests for every treatment pair `row < col`, each oriented as
/// column versus row (wins mean the column treatment scored higher).
pub fn wtl_matrix(table: &ScoreTable, alpha: f64) -> Result<Vec<PairwiseCell>> {
    let k = table.treatments.len();
    if k < 2 {
        return Err(Error::InvalidParameter("pairwise comparison needs 2 treatments".into()));
    }
    let mut cells = Vec::with_capacity(k * (k - 1) / 2);
    for row in 0..k {
        for col in row + 1..k {
            let result = wilcoxon_signed_rank(&table.column(col), &table.column(row), alpha)?;
            cells.push(PairwiseCell { row, col, result });
        }
    }
    Ok(cells)
}
