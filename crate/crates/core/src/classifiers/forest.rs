use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Sentiment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    /// Features tried per split; defaults to `ceil(sqrt(dim))`.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 16,
            max_features: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        positive_fraction: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A CART tree stored as a flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn positive_fraction(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positive_fraction } => return *positive_fraction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

/// Bagged Gini trees. Tree `t` draws from stream `t` of a ChaCha8 generator
/// seeded with the spec seed, so trees can be grown in parallel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    positive: Vec<bool>,
    params: &'a ForestParams,
    max_features: usize,
    nodes: Vec<Node>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let pos = rows.iter().filter(|&&r| self.positive[r]).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            positive_fraction: pos as f64 / rows.len() as f64,
        });
        if depth >= self.params.max_depth
            || rows.len() < self.params.min_samples_split
            || pos == 0
            || pos == rows.len()
        {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows, pos, rng) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, rows: &[usize], pos: usize, rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let dim = self.x[0].len();
        let n = rows.len();
        let parent = gini(pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);
        for feature in sample(rng, dim, self.max_features.min(dim)).into_iter() {
            column.clear();
            column.extend(rows.iter().map(|&i| (self.x[i][feature], self.positive[i])));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 0..n - 1 {
                if column[k].1 {
                    left_pos += 1;
                }
                if column[k].0 == column[k + 1].0 {
                    continue;
                }
                let nl = k + 1;
                let nr = n - nl;
                let impurity = (nl as f64 * gini(left_pos, nl)
                    + nr as f64 * gini(pos - left_pos, nr))
                    / n as f64;
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let threshold = column[k].0 + (column[k + 1].0 - column[k].0) / 2.0;
                    best = Some((impurity, feature, threshold));
                }
            }
        }
        match best {
            Some((impurity, feature, threshold)) if impurity < parent - 1e-12 => {
                Some((feature, threshold))
            }
            _ => None,
        }
    }
}

impl RandomForest {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams, seed: u64) -> Self {
        let n = x.len();
        let dim = x[0].len();
        let max_features = params
            .max_features
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .max(1);
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut grower = Grower {
                    x,
                    positive: y.iter().map(|&s| s > 0.0).collect(),
                    params,
                    max_features,
                    nodes: Vec::new(),
                };
                grower.grow(rows, 0, &mut rng);
                Tree {
                    nodes: grower.nodes,
                }
            })
            .collect();
        Self { trees }
    }

    /// Mean of the per-tree leaf fractions; exactly one half counts as positive.
    pub fn positive_probability(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.positive_fraction(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[f64]) -> Sentiment {
        if self.positive_probability(x) >= 0.5 {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        }
    }
}
