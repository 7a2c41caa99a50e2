use ndarray::{Array1, Array2, ArrayView1};

use crate::data::Class;

#[derive(Clone, Debug)]
pub(crate) struct NearestCentroid {
    negative: Array1<f64>,
    positive: Array1<f64>,
}

impl NearestCentroid {
    pub(crate) fn fit(x: &Array2<f64>, y: &[Class]) -> Self {
        let mean_of = |class| {
            let mut sum = Array1::zeros(x.ncols());
            let mut n = 0usize;
            for (row, &c) in x.rows().into_iter().zip(y) {
                if c == class {
                    sum += &row;
                    n += 1;
                }
            }
            sum / n.max(1) as f64
        };
        NearestCentroid {
            negative: mean_of(Class::Negative),
            positive: mean_of(Class::Positive),
        }
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> Option<Class> {
        let sq = |c: &Array1<f64>| c.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        super::from_score(sq(&self.negative) - sq(&self.positive))
    }
}
