use ndarray::{Array2, ArrayView1};

use crate::data::Class;

/// Brute-force k-nearest-neighbours on squared Euclidean distance.
/// Distance ties go to the lower row index, i.e. the lower instance id.
#[derive(Clone, Debug)]
pub(crate) struct Knn {
    x: Array2<f64>,
    y: Vec<Class>,
    k: usize,
}

impl Knn {
    pub(crate) fn fit(x: Array2<f64>, y: Vec<Class>, k: usize) -> Self {
        Knn { x, y, k }
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> Option<Class> {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let d = r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                (d, i)
            })
            .collect();
        let k = self.k.min(dist.len());
        if k == 0 {
            return None;
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_unstable_by(cmp);
        let positives = dist.iter().filter(|(_, i)| self.y[*i] == Class::Positive).count();
        Some(match (2 * positives).cmp(&k) {
            std::cmp::Ordering::Greater => Class::Positive,
            std::cmp::Ordering::Less => Class::Negative,
            std::cmp::Ordering::Equal => self.y[dist[0].1],
        })
    }
}
