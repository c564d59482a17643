use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearSvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 200,
        }
    }
}

/// Hinge loss with L2 penalty, fit by stochastic subgradient steps with
/// step size `1 / (lambda * t)`. The bias is an extra constant feature and is
/// regularized with the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[f64], params: &LinearSvmParams, seed: u64) -> Self {
        let dim = x.first().map_or(0, Vec::len);
        let lambda = params.lambda;
        let radius = 1.0 / lambda.sqrt();
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut t = 0u64;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = y[i] * (dot(&w, &x[i]) + b);
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                b *= shrink;
                if margin < 1.0 {
                    w.iter_mut()
                        .zip(&x[i])
                        .for_each(|(v, xi)| *v += eta * y[i] * xi);
                    b += eta * y[i];
                }
                let norm = (dot(&w, &w) + b * b).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|v| *v *= s);
                    b *= s;
                }
            }
        }
        Self {
            weights: w,
            bias: b,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
