use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Brownian bridge from `B(0) = 0` to `B(L) = z` on `m` equally spaced times
/// `t_i = i·L/(m−1)`, built left to right from the conditional Gaussian laws.
pub fn sample_brownian_bridge<R: Rng + ?Sized>(duration: f64, z: f64, m: usize, rng: &mut R) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::param("grid_points", format!("need at least 2, got {m}")));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::param("duration", format!("must be positive, got {duration}")));
    }
    let dt = duration / (m - 1) as f64;
    let mut path = Vec::with_capacity(m);
    path.push(0.0);
    let mut b = 0.0;
    for i in 1..m - 1 {
        let t = (i - 1) as f64 * dt;
        let rest = duration - t;
        let mean = b + (z - b) * dt / rest;
        let var = dt * (rest - dt) / rest;
        let g: f64 = rng.sample(StandardNormal);
        b = mean + var.sqrt() * g;
        path.push(b);
    }
    path.push(z);
    Ok(path)
}

/// Empirical `P(sup_t B(t) − tz/L > s)` over grid times together with the
/// reflection-principle value `e^{−2s²/L}` (exact for the continuous bridge).
pub fn brownian_sup_tail(paths: &[Vec<f64>], duration: f64, z: f64, s: f64) -> (f64, f64) {
    let hits = paths
        .iter()
        .filter(|p| {
            let m = p.len();
            p.iter().enumerate().any(|(i, &b)| {
                let t = duration * i as f64 / (m - 1) as f64;
                b - t * z / duration > s
            })
        })
        .count();
    (hits as f64 / paths.len() as f64, (-2.0 * s * s / duration).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn midpoint_variance_and_pinning() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = 2.0;
        let paths: Vec<Vec<f64>> = (0..100_000).map(|_| sample_brownian_bridge(l, 0.0, 21, &mut rng).unwrap()).collect();
        let mids: Vec<f64> = paths.iter().map(|p| p[10]).collect();
        let v = variance(&mids);
        // standard error of a Gaussian sample variance: v·sqrt(2/(n−1))
        let se = (l / 4.0) * (2.0 / 99_999.0f64).sqrt();
        assert!((v - l / 4.0).abs() < 3.0 * se, "{v}");
        assert!(mean(&mids).abs() < 4.0 * (l / 4.0 / 1e5f64).sqrt());
        assert!(paths.iter().all(|p| p[20] == 0.0 && p[0] == 0.0));
    }

    #[test]
    fn drift_follows_the_endpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let quarter: Vec<f64> = (0..40_000)
            .map(|_| sample_brownian_bridge(1.0, 2.0, 5, &mut rng).unwrap()[1])
            .collect();
        // B(1/4) ~ N(1/2, 3/16)
        assert!((mean(&quarter) - 0.5).abs() < 4.0 * (0.1875f64 / 4e4).sqrt());
        assert!((variance(&quarter) - 0.1875).abs() < 0.01);
    }

    #[test]
    fn sup_tail_below_reflection_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let paths: Vec<Vec<f64>> = (0..20_000).map(|_| sample_brownian_bridge(1.0, 0.0, 201, &mut rng).unwrap()).collect();
        for s in [1.0, 2.0] {
            let (emp, bound) = brownian_sup_tail(&paths, 1.0, 0.0, s);
            let se = (bound * (1.0 - bound) / 20_000.0).sqrt();
            assert!(emp <= bound + 3.0 * se, "s={s}: {emp} > {bound}");
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_brownian_bridge(1.0, 0.0, 1, &mut rng).is_err());
        assert!(sample_brownian_bridge(0.0, 0.0, 5, &mut rng).is_err());
        assert_eq!(sample_brownian_bridge(1.0, 3.0, 2, &mut rng).unwrap(), vec![0.0, 3.0]);
    }
}
