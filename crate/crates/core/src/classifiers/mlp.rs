//! One-hidden-layer perceptron with ReLU units and a logistic output.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 100,
            learning_rate: 0.01,
        }
    }
}

/// Weights are row-major: `w1[h][d]` maps input `d` to hidden unit `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Same shapes as [`Mlp`], holding partial derivatives of the loss.
pub type MlpGradient = Mlp;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against a 0/1 target, computed from the logit.
fn bce_with_logit(z: f64, target: f64) -> f64 {
    z.max(0.0) - z * target + (-z.abs()).exp().ln_1p()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let a1 = (6.0 / (dim + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        let w1 = (0..hidden)
            .map(|_| (0..dim).map(|_| rng.gen_range(-a1..a1)).collect())
            .collect();
        let w2 = (0..hidden).map(|_| rng.gen_range(-a2..a2)).collect();
        Self {
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: 0.0,
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            w1: self.w1.iter().map(|r| vec![0.0; r.len()]).collect(),
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: 0.0,
        }
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let pre = self.hidden_pre(x);
        pre.iter()
            .zip(&self.w2)
            .map(|(p, w)| p.max(0.0) * w)
            .sum::<f64>()
            + self.b2
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Cross-entropy for one example with a ±1 label, and its gradient.
    pub fn loss_and_gradient(&self, x: &[f64], y: f64) -> (f64, MlpGradient) {
        let target = if y > 0.0 { 1.0 } else { 0.0 };
        let pre = self.hidden_pre(x);
        let act: Vec<f64> = pre.iter().map(|p| p.max(0.0)).collect();
        let z = act.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2;
        let loss = bce_with_logit(z, target);
        let dz = sigmoid(z) - target;
        let mut grad = self.zeros_like();
        grad.b2 = dz;
        for h in 0..pre.len() {
            grad.w2[h] = dz * act[h];
            if pre[h] > 0.0 {
                let dh = dz * self.w2[h];
                grad.b1[h] = dh;
                grad.w1[h].iter_mut().zip(x).for_each(|(g, v)| *g = dh * v);
            }
        }
        (loss, grad)
    }

    /// Mean loss and gradient over a batch.
    pub fn batch_loss_and_gradient(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, MlpGradient) {
        let mut total = 0.0;
        let mut grad = self.zeros_like();
        for (xi, &yi) in x.iter().zip(y) {
            let (l, g) = self.loss_and_gradient(xi, yi);
            total += l;
            grad.axpy(1.0, &g);
        }
        let n = x.len().max(1) as f64;
        grad.scale(1.0 / n);
        (total / n, grad)
    }

    /// All parameters in a fixed order: `w1` rows, `b1`, `w2`, `b2`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.w1.iter().flatten().copied().collect();
        out.extend(&self.b1);
        out.extend(&self.w2);
        out.push(self.b2);
        out
    }

    /// Inverse of [`Mlp::flatten`] for a network of the same shape.
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        let mut it = flat.iter().copied();
        let mut next = || it.next().expect("flat parameter vector too short");
        let w1 = self
            .w1
            .iter()
            .map(|r| r.iter().map(|_| next()).collect())
            .collect();
        let b1 = self.b1.iter().map(|_| next()).collect();
        let w2 = self.w2.iter().map(|_| next()).collect();
        let b2 = next();
        Self { w1, b1, w2, b2 }
    }

    fn axpy(&mut self, a: f64, other: &Self) {
        for (r, o) in self.w1.iter_mut().zip(&other.w1) {
            r.iter_mut().zip(o).for_each(|(v, g)| *v += a * g);
        }
        self.b1
            .iter_mut()
            .zip(&other.b1)
            .for_each(|(v, g)| *v += a * g);
        self.w2
            .iter_mut()
            .zip(&other.w2)
            .for_each(|(v, g)| *v += a * g);
        self.b2 += a * other.b2;
    }

    fn scale(&mut self, a: f64) {
        self.w1.iter_mut().flatten().for_each(|v| *v *= a);
        self.b1.iter_mut().for_each(|v| *v *= a);
        self.w2.iter_mut().for_each(|v| *v *= a);
        self.b2 *= a;
    }

    pub(crate) fn fit(x: &[Vec<f64>], y: &[f64], params: &MlpParams, seed: u64) -> Self {
        let dim = x.first().map_or(0, Vec::len);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::init(dim, params.hidden, &mut rng);
        let mut order: Vec<usize> = (0..x.len()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (_, g) = net.loss_and_gradient(&x[i], y[i]);
                net.axpy(-params.learning_rate, &g);
            }
        }
        net
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_loss_matches_naive() {
        for z in [-5.0, -0.3, 0.0, 0.7, 4.0] {
            let p: f64 = sigmoid(z);
            assert!((bce_with_logit(z, 1.0) + p.ln()).abs() < 1e-12);
            assert!((bce_with_logit(z, 0.0) + (1.0 - p).ln()).abs() < 1e-12);
        }
        assert!(bce_with_logit(800.0, 0.0).is_finite());
    }

    #[test]
    fn flatten_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::init(3, 5, &mut rng);
        let flat = net.flatten();
        assert_eq!(flat.len(), 3 * 5 + 5 + 5 + 1);
        assert_eq!(net.with_flat(&flat), net);
    }
}
