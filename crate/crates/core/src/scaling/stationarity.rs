use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{ks_two_sample, mean, variance};

const MIN_REPLICAS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct SiteSummary {
    pub x: f64,
    /// Of `L̄₁(1, x) + x²/2`.
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsPair {
    pub x1: f64,
    pub x2: f64,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub sites: Vec<SiteSummary>,
    pub pairs: Vec<KsPair>,
    /// Per-pair p-value threshold, `0.001 / #pairs`.
    pub threshold: f64,
    pub stationarity_not_rejected: bool,
}

/// Per-site summaries and pairwise two-sample KS tests of `L̄₁(1, x) + x²/2`.
/// `samples[s]` holds the replicas at `xs[s]`.
pub fn stationarity_statistics(xs: &[f64], samples: &[Vec<f64>]) -> Result<StationarityReport> {
    if xs.len() < 2 || xs.len() != samples.len() {
        return Err(Error::InsufficientData {
            what: "distinct x sites with samples",
            needed: 2,
            got: xs.len().min(samples.len()),
        });
    }
    let fewest = samples.iter().map(Vec::len).min().unwrap_or(0);
    if fewest < MIN_REPLICAS {
        return Err(Error::InsufficientData {
            what: "replicas per site",
            needed: MIN_REPLICAS,
            got: fewest,
        });
    }
    let shifted: Vec<Vec<f64>> = xs
        .iter()
        .zip(samples)
        .map(|(&x, v)| v.iter().map(|y| y + x * x / 2.0).collect())
        .collect();
    let sites = xs
        .iter()
        .zip(&shifted)
        .map(|(&x, v)| SiteSummary {
            x,
            mean: mean(v),
            variance: variance(v),
        })
        .collect();
    let mut pairs = Vec::new();
    for a in 0..xs.len() {
        for b in a + 1..xs.len() {
            let ks = ks_two_sample(&shifted[a], &shifted[b])?;
            pairs.push(KsPair {
                x1: xs[a],
                x2: xs[b],
                statistic: ks.statistic,
                p_value: ks.p_value,
            });
        }
    }
    let threshold = 0.001 / pairs.len() as f64;
    let ok = pairs.iter().all(|p| p.p_value > threshold);
    Ok(StationarityReport {
        sites,
        pairs,
        threshold,
        stationarity_not_rejected: ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_shift_gives_zero_statistic() {
        let xs = [-1.0, 0.0, 1.0];
        let base: Vec<f64> = (0..150).map(|i| i as f64 * 0.25).collect();
        let samples: Vec<Vec<f64>> = xs.iter().map(|x| base.iter().map(|b| b - x * x / 2.0).collect()).collect();
        let r = stationarity_statistics(&xs, &samples).unwrap();
        assert!(r.pairs.iter().all(|p| p.statistic < 1e-12));
        assert!(r.stationarity_not_rejected);
    }

    #[test]
    fn iid_null_is_not_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs = [-1.0, 0.0, 1.0];
        let samples: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| (0..400).map(|_| rng.random::<f64>() - x * x / 2.0).collect())
            .collect();
        assert!(stationarity_statistics(&xs, &samples).unwrap().stationarity_not_rejected);
    }

    #[test]
    fn drift_is_rejected_and_small_inputs_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs = [0.0, 1.0];
        let samples: Vec<Vec<f64>> = xs.iter().map(|x| (0..400).map(|_| rng.random::<f64>() + x).collect()).collect();
        assert!(!stationarity_statistics(&xs, &samples).unwrap().stationarity_not_rejected);
        assert!(stationarity_statistics(&[0.0], &samples[..1]).is_err());
        assert!(stationarity_statistics(&xs, &[vec![0.0; 50], vec![0.0; 50]]).is_err());
    }
}
