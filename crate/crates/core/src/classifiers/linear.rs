use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;

use super::{as_sign, from_score};
use crate::data::Class;
use crate::seed;

/// Linear decision function `w . x + b`.
#[derive(Clone, Debug)]
pub(crate) struct LinearModel {
    weights: Array1<f64>,
    bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearModel {
    /// Full-batch gradient descent on the mean log loss plus
    /// `l2 / 2 * |w|^2`; the bias is not regularized.
    pub(crate) fn logistic(
        x: &Array2<f64>,
        y: &[Class],
        learning_rate: f64,
        iterations: usize,
        l2: f64,
    ) -> Self {
        let n = x.nrows() as f64;
        let target: Array1<f64> = y
            .iter()
            .map(|&c| if c == Class::Positive { 1.0 } else { 0.0 })
            .collect();
        let mut w = Array1::<f64>::zeros(x.ncols());
        let mut b = 0.0;
        for _ in 0..iterations {
            let residual = (x.dot(&w) + b).mapv(sigmoid) - &target;
            let grad_w = x.t().dot(&residual) / n + &w * l2;
            let grad_b = residual.sum() / n;
            w.scaled_add(-learning_rate, &grad_w);
            b -= learning_rate * grad_b;
        }
        LinearModel { weights: w, bias: b }
    }

    /// Averaged perceptron; the visiting order is reshuffled every epoch.
    pub(crate) fn perceptron(
        x: &Array2<f64>,
        y: &[Class],
        epochs: usize,
        learning_rate: f64,
        seed: u64,
    ) -> Self {
        let mut rng = seed::rng(seed);
        let mut w = Array1::<f64>::zeros(x.ncols());
        let mut b = 0.0;
        let mut w_sum = Array1::<f64>::zeros(x.ncols());
        let mut b_sum = 0.0;
        let mut order: Vec<usize> = (0..x.nrows()).collect();
        let mut steps = 0usize;
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let row = x.row(i);
                let t = as_sign(y[i]);
                if t * (row.dot(&w) + b) <= 0.0 {
                    w.scaled_add(learning_rate * t, &row);
                    b += learning_rate * t;
                }
                w_sum += &w;
                b_sum += b;
                steps += 1;
            }
        }
        let steps = steps.max(1) as f64;
        LinearModel {
            weights: w_sum / steps,
            bias: b_sum / steps,
        }
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> Option<Class> {
        from_score(row.dot(&self.weights) + self.bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perceptron_separates_a_line() {
        let x = array![[-2.0], [-1.0], [1.0], [2.0]];
        let y = [Class::Negative, Class::Negative, Class::Positive, Class::Positive];
        let m = LinearModel::perceptron(&x, &y, 10, 1.0, 3);
        for (row, c) in x.rows().into_iter().zip(y) {
            assert_eq!(m.predict_row(row), Some(c));
        }
    }
}
