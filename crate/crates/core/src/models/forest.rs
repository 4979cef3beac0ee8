use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{feature_matrix, Example, Instance, Learner, Predictor};
use crate::error::{Error, Result};

pub const MIN_LEAF: usize = 2;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Variance-reduction regression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    sse: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

fn mean_and_sse(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let sse = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    (mean, sse)
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize], parent_sse: f64) -> Option<BestSplit> {
        let n = idx.len();
        if n < 2 * self.min_leaf {
            return None;
        }
        let dim = self.x[idx[0]].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..dim {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let total: f64 = order.iter().map(|&i| self.y[i]).sum();
            let total_sq: f64 = order.iter().map(|&i| self.y[i] * self.y[i]).sum();
            let (mut s, mut sq) = (0.0, 0.0);
            for p in 1..n {
                let yi = self.y[order[p - 1]];
                s += yi;
                sq += yi * yi;
                if p < self.min_leaf || n - p < self.min_leaf {
                    continue;
                }
                let (lo, hi) = (self.x[order[p - 1]][f], self.x[order[p]][f]);
                if lo >= hi {
                    continue;
                }
                let (nl, nr) = (p as f64, (n - p) as f64);
                let sse = (sq - s * s / nl) + ((total_sq - sq) - (total - s).powi(2) / nr);
                if best.is_none_or(|b| sse < b.2) {
                    best = Some((f, 0.5 * (lo + hi), sse));
                }
            }
        }
        let (feature, threshold, sse) = best?;
        // Require a real reduction; rounding noise on constant targets is not one.
        if sse >= parent_sse - 1e-12 * parent_sse.max(1.0) {
            return None;
        }
        let (left, right) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        Some(BestSplit {
            feature,
            threshold,
            sse,
            left,
            right,
        })
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let (mean, sse) = mean_and_sse(self.y, idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(mean));
        if depth >= self.max_depth || sse <= 0.0 {
            return id;
        }
        if let Some(split) = self.best_split(idx, sse) {
            debug_assert!(split.sse < sse);
            let left = self.grow(&split.left, depth + 1);
            let right = self.grow(&split.right, depth + 1);
            self.nodes[id] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
        }
        id
    }
}

impl RegressionTree {
    /// Fits on the rows `idx` (repeats allowed, as in a bootstrap sample).
    pub fn fit(x: &[Vec<f64>], y: &[f64], idx: &[usize], max_depth: usize, min_leaf: usize) -> Self {
        let mut b = Builder {
            x,
            y,
            max_depth,
            min_leaf: min_leaf.max(1),
            nodes: Vec::new(),
        };
        if !idx.is_empty() {
            b.grow(idx, 0);
        }
        RegressionTree { nodes: b.nodes }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RandomForestLearner {
    pub max_depth: usize,
    pub trees: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RandomForestModel {
    pub trees: Vec<RegressionTree>,
}

impl Predictor for RandomForestModel {
    fn predict(&self, x: &Instance) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(&x.features)).sum();
        (sum / self.trees.len() as f64).exp()
    }
}

impl RandomForestLearner {
    pub fn fit_model(&self, train: &[Example]) -> Result<RandomForestModel> {
        if train.len() < 2 || self.trees == 0 {
            return Err(Error::fit("random forest", "needs at least two rows and one tree"));
        }
        let x = feature_matrix(train);
        let y: Vec<f64> = train.iter().map(Example::log_target).collect();
        let n = train.len();
        let trees = (0..self.trees as u64)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(t);
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                RegressionTree::fit(&x, &y, &sample, self.max_depth, self.min_leaf)
            })
            .collect();
        Ok(RandomForestModel { trees })
    }
}

impl Learner for RandomForestLearner {
    fn name(&self) -> &str {
        "random forest"
    }

    fn fit(&self, train: &[Example]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit_model(train)?))
    }
}
