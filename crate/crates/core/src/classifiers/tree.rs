use std::fmt;

use ndarray::{Array2, ArrayView1};
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Class;
use crate::seed;

/// Node impurity measure for CART splits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    #[default]
    Gini,
    Entropy,
}

impl fmt::Display for SplitCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitCriterion::Gini => "gini",
            SplitCriterion::Entropy => "entropy",
        })
    }
}

impl SplitCriterion {
    fn impurity(self, neg: usize, pos: usize) -> f64 {
        let n = (neg + pos) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (p0, p1) = (neg as f64 / n, pos as f64 / n);
        match self {
            SplitCriterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            SplitCriterion::Entropy => {
                let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
                h(p0) + h(p1)
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf(Class),
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary CART tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

struct Grower<'a> {
    x: &'a Array2<f64>,
    y: &'a [Class],
    criterion: SplitCriterion,
    max_depth: usize,
    /// Features examined per node; `None` examines all of them.
    max_features: Option<usize>,
    rng: Option<ChaCha8Rng>,
    nodes: Vec<Node>,
}

fn majority(neg: usize, pos: usize, tie: Class) -> Class {
    match neg.cmp(&pos) {
        std::cmp::Ordering::Greater => Class::Negative,
        std::cmp::Ordering::Less => Class::Positive,
        std::cmp::Ordering::Equal => tie,
    }
}

impl Grower<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize, parent_majority: Class) -> usize {
        let pos = rows.iter().filter(|&&r| self.y[r] == Class::Positive).count();
        let neg = rows.len() - pos;
        let label = majority(neg, pos, parent_majority);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf(label));
        if neg == 0 || pos == 0 || depth >= self.max_depth || rows.len() < 2 {
            return slot;
        }
        let Some((feature, threshold)) = self.best_split(rows, neg, pos) else {
            return slot;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[[r, feature]] <= threshold);
        let left = self.grow(&left_rows, depth + 1, label);
        let right = self.grow(&right_rows, depth + 1, label);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        match (self.max_features, self.rng.as_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = index::sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    /// Lowest weighted child impurity; ties keep the lowest feature index
    /// and then the lowest threshold. Splits must strictly reduce impurity.
    fn best_split(&mut self, rows: &[usize], neg: usize, pos: usize) -> Option<(usize, f64)> {
        let n = rows.len() as f64;
        let mut best_score = self.criterion.impurity(neg, pos) - 1e-12;
        let mut best = None;
        let mut sorted: Vec<(f64, Class)> = Vec::with_capacity(rows.len());
        for f in self.candidate_features() {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[[r, f]], self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut lneg, mut lpos) = (0usize, 0usize);
            for i in 0..sorted.len() - 1 {
                match sorted[i].1 {
                    Class::Negative => lneg += 1,
                    Class::Positive => lpos += 1,
                }
                let (v, next) = (sorted[i].0, sorted[i + 1].0);
                if v >= next {
                    continue;
                }
                let nl = (lneg + lpos) as f64;
                let score = (nl * self.criterion.impurity(lneg, lpos)
                    + (n - nl) * self.criterion.impurity(neg - lneg, pos - lpos))
                    / n;
                if score < best_score {
                    best_score = score;
                    let mid = 0.5 * (v + next);
                    best = Some((f, if mid >= next { v } else { mid }));
                }
            }
        }
        best
    }
}

impl Tree {
    pub(crate) fn fit(x: &Array2<f64>, y: &[Class], criterion: SplitCriterion, max_depth: usize) -> Self {
        let rows: Vec<usize> = (0..x.nrows()).collect();
        Self::grow(x, y, &rows, criterion, max_depth, None, None)
    }

    fn grow(
        x: &Array2<f64>,
        y: &[Class],
        rows: &[usize],
        criterion: SplitCriterion,
        max_depth: usize,
        max_features: Option<usize>,
        rng: Option<ChaCha8Rng>,
    ) -> Self {
        let pos = y.iter().filter(|&&c| c == Class::Positive).count();
        let root_tie = majority(y.len() - pos, pos, Class::Negative);
        let mut g = Grower {
            x,
            y,
            criterion,
            max_depth,
            max_features,
            rng,
            nodes: Vec::new(),
        };
        g.grow(rows, 0, root_tie);
        Tree { nodes: g.nodes }
    }

    /// Tree grown on a bootstrap sample with `max_features` features tried
    /// per node, all randomness drawn from `seed`.
    pub(crate) fn fit_randomized(
        x: &Array2<f64>,
        y: &[Class],
        criterion: SplitCriterion,
        max_depth: usize,
        max_features: usize,
        seed: u64,
    ) -> Self {
        let mut rng = seed::rng(seed);
        let n = x.nrows();
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        Self::grow(x, y, &rows, criterion, max_depth, Some(max_features), Some(rng))
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> Class {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    #[cfg(test)]
    fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Bagged trees with `max(1, floor(sqrt(d)))` features tried per node.
/// Tree `b` draws all of its randomness from `derive(seed, [b])`.
#[derive(Clone, Debug)]
pub(crate) struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub(crate) fn fit(
        x: &Array2<f64>,
        y: &[Class],
        criterion: SplitCriterion,
        max_depth: usize,
        trees: usize,
        seed: u64,
    ) -> Self {
        let max_features = ((x.ncols() as f64).sqrt().floor() as usize).max(1);
        Forest {
            trees: (0..trees as u64)
                .map(|b| {
                    Tree::fit_randomized(x, y, criterion, max_depth, max_features, seed::derive(seed, &[b]))
                })
                .collect(),
        }
    }

    /// Majority of tree votes; an even split is left undecided.
    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> Option<Class> {
        let pos = self.trees.iter().filter(|t| t.predict_row(row) == Class::Positive).count();
        match (2 * pos).cmp(&self.trees.len()) {
            std::cmp::Ordering::Greater => Some(Class::Positive),
            std::cmp::Ordering::Less => Some(Class::Negative),
            std::cmp::Ordering::Equal => None,
        }
    }
}
