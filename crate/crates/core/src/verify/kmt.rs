use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::bridge::{sup_distance, DiscreteIncrementLaw, QuantileCoupler};
use crate::ensemble::RWHamiltonian;
use crate::error::{Error, Result};
use crate::scaling::scaled_hamiltonians;
use crate::seed::rng_for;
use crate::special::{digamma, trigamma};
use crate::stats::{linear_fit, quantile};

/// Lattice spacing in units of the increment standard deviation.
const DEFAULT_DELTA0: f64 = 0.05;
/// Probability below which law end points are dropped, relative to the mode.
const LAW_TRIM: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkFamily {
    /// `log G` with `G ~ Exp(1)`, centered and scaled to variance `1/N` per step.
    LogGammaShapeOne,
    /// The scaled polymer walk whose lattice has `N` sites per unit length.
    Polymer,
}

/// Increment law with `N` steps per unit time, and the diffusivity (variance
/// per unit time) of the walk it drives.
pub fn a4_walk(family: WalkFamily, n: usize, delta0: f64) -> Result<(DiscreteIncrementLaw, f64)> {
    if n == 0 {
        return Err(Error::param("N", "must be positive"));
    }
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(Error::param("delta0", format!("must lie in (0, 1), got {delta0}")));
    }
    match family {
        WalkFamily::LogGammaShapeOne => {
            let h = RWHamiltonian::log_gamma(1.0, digamma(1.0f64))?;
            let sd = trigamma(1.0f64).sqrt();
            let law = DiscreteIncrementLaw::discretize(&h, delta0 * sd, 45.0)?.trimmed(LAW_TRIM);
            let law = law.scaled(1.0 / (n as f64 * law.variance()).sqrt())?;
            Ok((law, 1.0))
        }
        WalkFamily::Polymer => {
            // Mesh 2/√N' = 1/N, i.e. N' = 4N².
            let np = 4 * n * n;
            let h = scaled_hamiltonians(np)?.random_walk;
            let sd = h.variance().sqrt();
            let reach = h.mean().abs() + 45.0 * sd;
            let law = DiscreteIncrementLaw::discretize(&h, delta0 * sd, reach)?.trimmed(LAW_TRIM);
            let diffusivity = law.variance() * n as f64;
            Ok((law, diffusivity))
        }
    }
}

/// `sup` over lattice times of `|B(t) + tz/L − S(t)|` for quantile-coupled
/// pairs; sample `i` uses the generator derived from `(seed, stream, i)`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_sup_distances(
    law: &DiscreteIncrementLaw,
    steps: usize,
    duration: f64,
    z: f64,
    diffusivity: f64,
    samples: usize,
    seed: u64,
    stream: &str,
) -> Result<Vec<f64>> {
    let coupler = QuantileCoupler::new(law, steps, z / steps as f64)?;
    let z_lat = (z / law.delta()).round() * law.delta();
    let scale = diffusivity.sqrt();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, stream, i as u64);
            let u = coupler.draw_uniforms(&mut rng);
            let s = coupler.lattice_path(0.0, z_lat, &u)?;
            let b: Vec<f64> = coupler
                .brownian_path(duration, z_lat / scale, &u)
                .into_iter()
                .map(|x| x * scale)
                .collect();
            Ok(sup_distance(&s, &b))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct A4Config {
    pub ns: Vec<usize>,
    pub duration: f64,
    pub z: f64,
    pub samples: usize,
    pub family: WalkFamily,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    pub seed: u64,
}

fn default_delta0() -> f64 {
    DEFAULT_DELTA0
}

#[derive(Debug, Clone, Serialize)]
pub struct A4Row {
    pub n: usize,
    pub steps: usize,
    /// `log(N^{-1/2} log(NL))`.
    pub x: f64,
    pub median: f64,
    pub q99: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct A4Report {
    pub rows: Vec<A4Row>,
    pub slope_q99: f64,
    pub intercept_q99: f64,
    pub slope_median: f64,
    pub intercept_median: f64,
    pub report: CheckReport,
}

const SLOPE_BAND: (f64, f64) = (0.7, 1.3);

/// Fits `log q99` of the coupled sup-distance against `log(N^{-1/2} log(NL))`
/// and passes when the slope lies in `[0.7, 1.3]`.
pub fn check_a4(cfg: &A4Config) -> Result<A4Report> {
    if cfg.ns.len() < 3 {
        return Err(Error::InsufficientData {
            what: "values of N for the scaling fit",
            needed: 3,
            got: cfg.ns.len(),
        });
    }
    if cfg.samples < 100 {
        return Err(Error::InsufficientData {
            what: "coupled pairs per N",
            needed: 100,
            got: cfg.samples,
        });
    }
    if !(cfg.duration > 0.0) || !cfg.z.is_finite() {
        return Err(Error::param("duration", "need L > 0 and finite z"));
    }
    let mut rows = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let nl = n as f64 * cfg.duration;
        let steps = nl.round();
        if (nl - steps).abs() > 1e-9 || steps < 2.0 {
            return Err(Error::param("duration", format!("N·L = {nl} must be an integer ≥ 2")));
        }
        let steps = steps as usize;
        let (law, diff) = a4_walk(cfg.family, n, cfg.delta0)?;
        let d = coupled_sup_distances(&law, steps, cfg.duration, cfg.z, diff, cfg.samples, cfg.seed, &format!("a4-{n}"))?;
        rows.push(A4Row {
            n,
            steps,
            x: ((n as f64).powf(-0.5) * nl.ln()).ln(),
            median: quantile(&d, 0.5),
            q99: quantile(&d, 0.99),
            mean: crate::stats::mean(&d),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let (slope_q99, intercept_q99) = linear_fit(&xs, &rows.iter().map(|r| r.q99.ln()).collect::<Vec<_>>());
    let (slope_median, intercept_median) = linear_fit(&xs, &rows.iter().map(|r| r.median.ln()).collect::<Vec<_>>());
    let margin = (slope_q99 - SLOPE_BAND.0).min(SLOPE_BAND.1 - slope_q99);
    let report = CheckReport::new("A4", (cfg.samples * cfg.ns.len()) as u64, margin, 0.0, "slope band [0.7, 1.3] around the KMT rate")
        .param("ns", &cfg.ns)
        .param("L", cfg.duration)
        .param("z", cfg.z)
        .param("family", cfg.family)
        .param("delta0", cfg.delta0)
        .seed(cfg.seed)
        .details(serde_json::json!({
            "slope_q99": slope_q99,
            "slope_median": slope_median,
        }));
    Ok(A4Report {
        rows,
        slope_q99,
        intercept_q99,
        slope_median,
        intercept_median,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_laws_have_the_advertised_variance() {
        for n in [16usize, 64] {
            let (law, d) = a4_walk(WalkFamily::LogGammaShapeOne, n, 0.05).unwrap();
            assert_eq!(d, 1.0);
            assert!((law.variance() * n as f64 - 1.0).abs() < 1e-12);
            assert!(law.mean().abs() < 1e-3 / (n as f64).sqrt());
            let (p, dp) = a4_walk(WalkFamily::Polymer, n, 0.1).unwrap();
            // Polymer walk: variance Ψ₁(2N) per step of length 1/N.
            assert!((dp - trigamma(2.0 * n as f64) * n as f64).abs() < 1e-3 * dp);
            assert!(p.is_discretely_convex(1e-9));
        }
    }

    #[test]
    fn single_step_distance_is_zero() {
        let (law, d) = a4_walk(WalkFamily::LogGammaShapeOne, 1, 0.05).unwrap();
        let v = coupled_sup_distances(&law, 1, 1.0, 0.0, d, 20, 1, "t").unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic_and_shrinking() {
        let (l16, _) = a4_walk(WalkFamily::LogGammaShapeOne, 16, 0.05).unwrap();
        let a = coupled_sup_distances(&l16, 16, 1.0, 0.0, 1.0, 400, 9, "t").unwrap();
        let b = coupled_sup_distances(&l16, 16, 1.0, 0.0, 1.0, 400, 9, "t").unwrap();
        assert_eq!(a, b);
        let (l256, _) = a4_walk(WalkFamily::LogGammaShapeOne, 256, 0.05).unwrap();
        let c = coupled_sup_distances(&l256, 256, 1.0, 0.0, 1.0, 400, 9, "t").unwrap();
        assert!(quantile(&c, 0.5) < quantile(&a, 0.5));
    }

    #[test]
    fn too_few_ns_is_an_error() {
        let cfg = A4Config {
            ns: vec![16, 32],
            duration: 1.0,
            z: 0.0,
            samples: 100,
            family: WalkFamily::LogGammaShapeOne,
            delta0: 0.05,
            seed: 0,
        };
        assert!(check_a4(&cfg).is_err());
    }
}
