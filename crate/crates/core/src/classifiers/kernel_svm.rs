use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfSvmParams {
    pub c: f64,
    /// Defaults to `1 / dim` when unset.
    pub gamma: Option<f64>,
    pub max_passes: usize,
    pub tolerance: f64,
}

impl Default for RbfSvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            max_passes: 1000,
            tolerance: 1e-3,
        }
    }
}

/// Soft-margin SVM with an RBF kernel, solved in the dual by coordinate descent.
/// The bias is folded into the kernel as `K(a, b) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSvm {
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub coefficients: Vec<f64>,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

impl KernelSvm {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[f64], params: &RbfSvmParams, seed: u64) -> Self {
        let n = x.len();
        let dim = x.first().map_or(0, Vec::len).max(1);
        let gamma = params.gamma.unwrap_or(1.0 / dim as f64);
        let kernel: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| rbf(gamma, &x[i], &x[j]) + 1.0).collect())
            .collect();
        let c = params.c;
        let mut alpha = vec![0.0; n];
        // f[i] = sum_j alpha_j y_j K_ij
        let mut f = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..params.max_passes {
            order.shuffle(&mut rng);
            let mut worst: f64 = 0.0;
            for &i in &order {
                let g = y[i] * f[i] - 1.0;
                let pg = if alpha[i] <= 0.0 {
                    g.min(0.0)
                } else if alpha[i] >= c {
                    g.max(0.0)
                } else {
                    g
                };
                worst = worst.max(pg.abs());
                if pg == 0.0 {
                    continue;
                }
                let updated = (alpha[i] - g / kernel[i][i]).clamp(0.0, c);
                let delta = (updated - alpha[i]) * y[i];
                alpha[i] = updated;
                if delta != 0.0 {
                    f.iter_mut()
                        .zip(&kernel[i])
                        .for_each(|(fj, k)| *fj += delta * k);
                }
            }
            if worst < params.tolerance {
                break;
            }
        }
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for i in 0..n {
            if alpha[i] > 0.0 {
                support_vectors.push(x[i].clone());
                coefficients.push(alpha[i] * y[i]);
            }
        }
        Self {
            gamma,
            support_vectors,
            coefficients,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * (rbf(self.gamma, sv, x) + 1.0))
            .sum()
    }
}
