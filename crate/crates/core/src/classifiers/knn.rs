use serde::{Deserialize, Serialize};

use crate::corpus::Sentiment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// k-nearest neighbours under Euclidean distance.
///
/// Neighbours are ranked by distance, then by training index. `k` larger than
/// the training set is clamped. A tied vote goes to the nearest neighbour's label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub signs: Vec<f64>,
}

impl Knn {
    pub(crate) fn fit(points: Vec<Vec<f64>>, signs: Vec<f64>, params: &KnnParams) -> Self {
        Self {
            k: params.k,
            points,
            signs,
        }
    }

    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let mut ranked: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ranked
            .into_iter()
            .take(self.k.min(self.points.len()))
            .map(|(_, i)| i)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Sentiment {
        let near = self.neighbours(x);
        let vote: f64 = near.iter().map(|&i| self.signs[i]).sum();
        let sign = if vote == 0.0 {
            self.signs[near[0]]
        } else {
            vote
        };
        if sign > 0.0 {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        }
    }
}
