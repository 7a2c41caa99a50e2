use ndarray::{Array2, ArrayView1};

use crate::data::Class;

/// Gaussian naive Bayes with class priors from training frequencies and
/// variance smoothing of `1e-9` times the largest feature variance.
#[derive(Clone, Debug)]
pub(crate) struct GaussianNb {
    /// Indexed `[negative, positive]`.
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub(crate) fn fit(x: &Array2<f64>, y: &[Class]) -> Self {
        let d = x.ncols();
        let n = x.nrows() as f64;
        let mut count = [0usize; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for (row, &c) in x.rows().into_iter().zip(y) {
            let ci = c as usize;
            count[ci] += 1;
            for (m, v) in mean[ci].iter_mut().zip(row) {
                *m += v;
            }
        }
        for ci in 0..2 {
            for m in &mut mean[ci] {
                *m /= count[ci].max(1) as f64;
            }
        }
        for (row, &c) in x.rows().into_iter().zip(y) {
            let ci = c as usize;
            for ((s, v), m) in var[ci].iter_mut().zip(row).zip(&mean[ci]) {
                *s += (v - m) * (v - m);
            }
        }
        let overall_max_var = (0..d)
            .map(|j| {
                let col = x.column(j);
                let mu = col.sum() / n;
                col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let epsilon = (1e-9 * overall_max_var).max(1e-12);
        for ci in 0..2 {
            for s in &mut var[ci] {
                *s = *s / count[ci].max(1) as f64 + epsilon;
            }
        }
        let log_prior = [
            (count[0] as f64 / n).ln(),
            (count[1] as f64 / n).ln(),
        ];
        GaussianNb {
            log_prior,
            mean,
            var,
        }
    }

    fn log_joint(&self, ci: usize, row: ArrayView1<f64>) -> f64 {
        let ll: f64 = row
            .iter()
            .zip(&self.mean[ci])
            .zip(&self.var[ci])
            .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v))
            .sum();
        self.log_prior[ci] + ll
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> Option<Class> {
        let neg = self.log_joint(0, row);
        let pos = self.log_joint(1, row);
        super::from_score(pos - neg)
    }
}
