use rand::Rng;
use serde::Serialize;

use super::{BridgeSampler, DiscreteIncrementLaw};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub s: f64,
    pub empirical: f64,
    pub bound: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Empirical `P(sup_t (S(t) − tz/L) > s)` for the lattice bridge from 0 to `z`
/// over `steps` steps spanning `[0, L]`, against the bound `e^{−s²/L}`.
///
/// A row passes when the empirical tail is at most the bound plus three Monte
/// Carlo standard errors.
pub fn bridge_sup_tail_check<R: Rng + ?Sized>(
    law: &DiscreteIncrementLaw,
    steps: usize,
    duration: f64,
    z: f64,
    s_values: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<Vec<TailRow>> {
    if let Some(bad) = s_values.iter().find(|&&s| !(s >= 1.0)) {
        return Err(Error::param("s", format!("tail levels must be at least 1, got {bad}")));
    }
    if samples == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let sampler = BridgeSampler::new(law.clone(), steps, 0.0, z)?;
    let sups: Vec<f64> = (0..samples)
        .map(|_| {
            sampler
                .sample(rng)
                .iter()
                .enumerate()
                .map(|(m, &x)| x - (m as f64 / steps as f64) * z)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(s_values
        .iter()
        .map(|&s| {
            let p = sups.iter().filter(|&&v| v > s).count() as f64 / samples as f64;
            let bound = (-s * s / duration).exp();
            let stderr = (p.max(1.0 / samples as f64) * (1.0 - p) / samples as f64).sqrt();
            TailRow {
                s,
                empirical: p,
                bound,
                stderr,
                pass: p <= bound + 3.0 * stderr,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::RWHamiltonian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_walk_respects_the_bound() {
        // 50 steps of variance 1/50 on [0, 1]
        let h = RWHamiltonian::quadratic(1.0 / 50.0).unwrap();
        let sd = (1.0f64 / 50.0).sqrt();
        let law = DiscreteIncrementLaw::discretize(&h, 0.05 * sd, 8.0 * sd).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows = bridge_sup_tail_check(&law, 50, 1.0, 0.0, &[1.0, 1.5, 3.0], 5000, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
        assert!(rows.windows(2).all(|w| w[0].empirical >= w[1].empirical));
        assert_eq!(rows[2].empirical, 0.0);
    }

    #[test]
    fn small_levels_are_rejected() {
        let law = DiscreteIncrementLaw::from_probs(1.0, -1, &[0.25, 0.5, 0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(bridge_sup_tail_check(&law, 4, 1.0, 0.0, &[0.5], 10, &mut rng).is_err());
    }
}
