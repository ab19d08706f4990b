use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::error::{Error, Result};

/// Inverse-gamma site weights `d_{i,j}` for columns `i = 1..=n_max` and rows `j = 1..=k_max`,
/// stored as `log d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    gamma: f64,
    n_max: usize,
    k_max: usize,
    log_weights: Vec<f64>,
}

impl Environment {
    /// Samples `d = 1/G` with `G ~ Gamma(γ, 1)` independently at every site.
    pub fn sample<R: Rng + ?Sized>(gamma: f64, n_max: usize, k_max: usize, rng: &mut R) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be positive and finite, got {gamma}")));
        }
        if n_max == 0 || k_max == 0 {
            return Err(Error::param("size", "environment needs at least one column and one row"));
        }
        let dist = Gamma::new(gamma, 1.0).map_err(|e| Error::param("gamma", e.to_string()))?;
        let mut log_weights = Vec::with_capacity(n_max * k_max);
        for _ in 0..n_max * k_max {
            let g: f64 = dist.sample(rng);
            // G can underflow to 0 for tiny shapes; keep the weight finite but huge.
            log_weights.push(-g.max(f64::MIN_POSITIVE).ln());
        }
        Ok(Self {
            gamma,
            n_max,
            k_max,
            log_weights,
        })
    }

    /// Environment from explicit positive weights, `weights[i-1][j-1] = d_{i,j}`.
    pub fn from_weights(gamma: f64, weights: &[Vec<f64>]) -> Result<Self> {
        let n_max = weights.len();
        let k_max = weights.first().map_or(0, Vec::len);
        if n_max == 0 || k_max == 0 {
            return Err(Error::param("weights", "environment needs at least one column and one row"));
        }
        let mut log_weights = Vec::with_capacity(n_max * k_max);
        for col in weights {
            if col.len() != k_max {
                return Err(Error::param("weights", "ragged weight matrix"));
            }
            for &d in col {
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::param("weights", format!("weights must be positive and finite, got {d}")));
                }
                log_weights.push(d.ln());
            }
        }
        Ok(Self {
            gamma,
            n_max,
            k_max,
            log_weights,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `log d_{i,j}` with 1-based `i` (column) and `j` (row).
    #[inline]
    pub fn log_weight(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i >= 1 && i <= self.n_max && j >= 1 && j <= self.k_max);
        self.log_weights[(i - 1) * self.k_max + (j - 1)]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.log_weight(i, j).exp()
    }

    pub(crate) fn check(&self, n: usize, k: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::IndexOutOfRange {
                what: "environment column",
                index: n as i64,
                valid: format!("0..={}", self.n_max),
            });
        }
        if k == 0 || k > self.k_max {
            return Err(Error::IndexOutOfRange {
                what: "environment row",
                index: k as i64,
                valid: format!("1..={}", self.k_max),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::digamma;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_weights_have_inverse_gamma_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = Environment::sample(3.0, 200, 100, &mut rng).unwrap();
        let n = (200 * 100) as f64;
        let m: f64 = env.log_weights.iter().sum::<f64>() / n;
        // E[log d] = −ψ(γ), Var = ψ₁(3) ≈ 0.395
        assert!((m + digamma(3.0)).abs() < 4.0 * (0.395f64 / n).sqrt());
    }

    #[test]
    fn same_seed_same_environment() {
        let a = Environment::sample(1.5, 4, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = Environment::sample(1.5, 4, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn explicit_weights_are_validated() {
        assert!(Environment::from_weights(1.0, &[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Environment::from_weights(1.0, &[vec![1.0, 0.0]]).is_err());
        let e = Environment::from_weights(1.0, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!((e.weight(2, 1) - 3.0).abs() < 1e-15);
    }
}
