//! Boltzmann machine representation, random SK instances, mean-field
//! solutions, corrected moments and exact enumeration oracles.

mod exact;
mod mean_field;
mod moments;

pub use exact::{
    brute_force_delta_h_moments, exact_correlation, exact_log_partition, log_z_tilde,
    MAX_EXACT_UNITS,
};
pub use mean_field::{
    mean_field_jacobian_radius, solve_mean_field, MeanFieldState, MfInit, MfOptions, MomentTable,
};
pub use moments::{corrected_moments, MomentVector};

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Pairwise binary model with symmetric weights, zero diagonal and external
/// thresholds on spins `s in {-1, +1}`:
/// `H(s) = sum_{i<j} w_ij s_i s_j + sum_i theta_i s_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannMachine {
    n: usize,
    /// Row-major `n x n`, symmetric, zero diagonal.
    weights: Vec<f64>,
    thresholds: Vec<f64>,
}

impl BoltzmannMachine {
    /// Builds a machine from a full weight matrix; validates symmetry, zero
    /// diagonal and finiteness.
    pub fn new(thresholds: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = thresholds.len();
        if weights.len() != n * n {
            return Err(Error::InvalidNetwork {
                reason: format!(
                    "weight matrix must be {n}x{n}, got {} entries",
                    weights.len()
                ),
            });
        }
        if thresholds.iter().any(|t| !t.is_finite()) || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidNetwork {
                reason: "non-finite entry".into(),
            });
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::InvalidNetwork {
                    reason: format!("nonzero diagonal weight at unit {i}"),
                });
            }
            for j in (i + 1)..n {
                if weights[i * n + j] != weights[j * n + i] {
                    return Err(Error::InvalidNetwork {
                        reason: format!("weights not symmetric at ({i}, {j})"),
                    });
                }
            }
        }
        Ok(Self {
            n,
            weights,
            thresholds,
        })
    }

    /// Builds a machine from the row-major strict upper triangle
    /// (`w_01, w_02, ..., w_0(n-1), w_12, ...`), mirroring it exactly.
    pub fn from_upper_triangle(thresholds: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = thresholds.len();
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidNetwork {
                reason: format!(
                    "upper triangle for {n} units needs {} entries, got {}",
                    n * (n - 1) / 2,
                    upper.len()
                ),
            });
        }
        let mut weights = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                weights[i * n + j] = upper[k];
                weights[j * n + i] = upper[k];
                k += 1;
            }
        }
        Self::new(thresholds, weights)
    }

    /// All-zero couplings.
    pub fn with_zero_weights(thresholds: Vec<f64>) -> Self {
        let n = thresholds.len();
        Self {
            n,
            weights: vec![0.0; n * n],
            thresholds,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn weights_row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    /// Sets `w_ij` and its mirror entry.
    pub fn set_symmetric_weight(&mut self, i: usize, j: usize, w: f64) {
        assert!(i != j, "diagonal weights are fixed at zero");
        self.weights[i * self.n + j] = w;
        self.weights[j * self.n + i] = w;
    }

    /// Row-major strict upper triangle of the weight matrix.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.weights[i * self.n + j]);
            }
        }
        out
    }

    /// `H(s)` for spins in `{-1.0, +1.0}`.
    pub fn energy(&self, spins: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut field = self.thresholds[i];
            for j in (i + 1)..self.n {
                field += self.weights[i * self.n + j] * spins[j];
            }
            acc += spins[i] * field;
        }
        acc
    }

    /// The machine with units relabelled by `perm` (`perm[new] = old`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut weights = vec![0.0; self.n * self.n];
        let mut thresholds = vec![0.0; self.n];
        for (new_i, &old_i) in perm.iter().enumerate() {
            thresholds[new_i] = self.thresholds[old_i];
            for (new_j, &old_j) in perm.iter().enumerate() {
                weights[new_i * self.n + new_j] = self.weights[old_i * self.n + old_j];
            }
        }
        Self {
            n: self.n,
            weights,
            thresholds,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let record = NetworkFile {
            n: self.n,
            theta: self.thresholds.clone(),
            weights_upper_triangle: self.upper_triangle(),
        };
        let mut text = serde_json::to_string_pretty(&record).expect("network serialization");
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let record: NetworkFile =
            serde_json::from_str(&text).map_err(|e| Error::InvalidNetwork {
                reason: format!("{}: {e}", path.display()),
            })?;
        if record.theta.len() != record.n {
            return Err(Error::InvalidNetwork {
                reason: format!(
                    "N = {} but theta has {} entries",
                    record.n,
                    record.theta.len()
                ),
            });
        }
        Self::from_upper_triangle(record.theta, record.weights_upper_triangle)
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    #[serde(rename = "N")]
    n: usize,
    theta: Vec<f64>,
    weights_upper_triangle: Vec<f64>,
}

/// Random fully connected instance in the SK ensemble: thresholds from
/// `Normal(0, sigma_theta^2)` and upper-triangle couplings from
/// `Normal(0, (sigma_w / sqrt(N))^2)`, mirrored. Deterministic per seed
/// (ChaCha12 stream, thresholds drawn first, then couplings row-major).
pub fn sk_random(n: usize, sigma_w: f64, sigma_theta: f64, seed: u64) -> BoltzmannMachine {
    assert!(n >= 1 && sigma_w >= 0.0 && sigma_theta >= 0.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draw = |sigma: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    };
    let thresholds: Vec<f64> = (0..n).map(|_| draw(sigma_theta)).collect();
    let scale = sigma_w / (n as f64).sqrt();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = draw(scale);
            weights[i * n + j] = w;
            weights[j * n + i] = w;
        }
    }
    BoltzmannMachine {
        n,
        weights,
        thresholds,
    }
}
