use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::ensemble::{Boundary, Grid, IncrementEnergy, LineEnsemble, LocalHamiltonian, RWHamiltonian, Shift};
use crate::error::{Error, Result};
use crate::mcmc::{resample_interior, ChainConfig, GibbsTarget};
use crate::polymer::{build_line_ensemble, Environment};
use crate::seed::{derive_seed, rng_for};
use crate::stats::{ks_two_sample, mean};

/// The unscaled polymer pair: `H(⎕) = exp(a₆ − a₂)` and
/// `H^RW(x) = log Γ(γ) + γx + e^{−x}`.
pub fn polymer_hamiltonians(gamma: f64) -> Result<(LocalHamiltonian<f64>, RWHamiltonian<f64>)> {
    Ok((LocalHamiltonian::exponential(1.0, Shift::After)?, RWHamiltonian::log_gamma(gamma, 0.0)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceConfig {
    pub gamma: f64,
    /// Polymer layer `K`.
    pub k: usize,
    /// Resampled curves `k1..=k2`.
    pub curves: (usize, usize),
    /// Polymer columns `a..=b`; the interior `a+1..=b−1` is resampled.
    pub columns: (usize, usize),
    pub replicas: usize,
    pub delta: f64,
    pub sweeps: usize,
    pub seed: u64,
    /// Also resample at `δ/2` and report the drift of the site means.
    #[serde(default)]
    pub bias_check: bool,
}

impl InvarianceConfig {
    fn validate(&self) -> Result<()> {
        let (k1, k2) = self.curves;
        let (a, b) = self.columns;
        if !(self.gamma > 0.0) {
            return Err(Error::param("gamma", "must be positive"));
        }
        if k1 == 0 || k1 > k2 || k2 > self.k {
            return Err(Error::param("curves", format!("need 1 ≤ k1 ≤ k2 ≤ K = {}", self.k)));
        }
        if a == 0 || a >= b {
            return Err(Error::param("columns", format!("need 1 ≤ a < b, got {a}..={b}")));
        }
        if a < (k2 + 1).min(self.k) {
            return Err(Error::OutsideDefinedRegion(format!(
                "window starts at column {a}, but rows up to {} must be defined there",
                (k2 + 1).min(self.k)
            )));
        }
        if self.replicas < 2 {
            return Err(Error::param("replicas", "need at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteKs {
    pub curve: usize,
    pub column: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub mean_original: f64,
    pub mean_resampled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub sites: Vec<SiteKs>,
    pub max_statistic: f64,
    /// `min(1, #sites · min p)`.
    pub adjusted_p: f64,
    /// Fraction of replicas whose window changed at all.
    pub changed_fraction: f64,
    /// Largest `|mean_δ − mean_{δ/2}|` over sites, when requested.
    pub discretization_drift: Option<f64>,
    pub report: CheckReport,
}

const ALPHA: f64 = 0.001;

/// Per-replica (original, resampled) window values in curve-major, column order.
fn run_replicas(
    cfg: &InvarianceConfig,
    h: &LocalHamiltonian<f64>,
    energy: &dyn IncrementEnergy,
    delta: f64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let (k1, k2) = cfg.curves;
    let (a, b) = cfg.columns;
    let rows = (k2 + 1).min(cfg.k);
    let interior = b - a - 1;
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(cfg.seed, "gibbs-invariance-env", r as u64);
            let env = Environment::sample(cfg.gamma, b, cfg.k, &mut rng)?;
            let pl = build_line_ensemble(&env, cfg.k, a, b, rows)?;
            let curves = (1..=rows).map(|i| pl.curve(i)).collect::<Result<Vec<_>>>()?;
            let l = LineEnsemble::new(
                Grid::new(a as f64, 1.0, b - a + 1)?,
                1,
                curves,
                Boundary::plus_infinity(),
                Boundary::minus_infinity(),
            )?;
            let pick = |e: &LineEnsemble| -> Result<Vec<f64>> {
                let mut v = Vec::with_capacity((k2 - k1 + 1) * interior);
                for k in k1..=k2 {
                    v.extend_from_slice(&e.curve(k)?[1..=interior]);
                }
                Ok(v)
            };
            let original = pick(&l)?;
            if interior == 0 {
                return Ok((original.clone(), original));
            }
            let chain = ChainConfig::new(delta, cfg.sweeps, 0, derive_seed(cfg.seed, "gibbs-invariance-chain", r as u64))?;
            let target = GibbsTarget::new(h, energy);
            let out = resample_interior(&l, k1, k2, 1..=interior, &target, &chain)?;
            Ok((original, pick(&out)?))
        })
        .collect()
}

/// Resamples a window of the polymer ensemble from fresh environments and
/// compares per-site marginals before and after with two-sample KS tests.
pub fn gibbs_invariance_test(
    cfg: &InvarianceConfig,
    h: &LocalHamiltonian<f64>,
    energy: &dyn IncrementEnergy,
) -> Result<InvarianceReport> {
    cfg.validate()?;
    if cfg.sweeps == 0 && cfg.columns.1 > cfg.columns.0 + 1 {
        return Err(Error::param("sweeps", "must be positive"));
    }
    let (k1, k2) = cfg.curves;
    let (a, b) = cfg.columns;
    let interior = b - a - 1;
    let runs = run_replicas(cfg, h, energy, cfg.delta)?;
    let site_count = (k2 - k1 + 1) * interior;
    let column = |j: usize| -> Vec<(f64, f64)> { runs.iter().map(|(o, n)| (o[j], n[j])).collect() };
    let mut sites = Vec::with_capacity(site_count);
    for j in 0..site_count {
        let (orig, new): (Vec<f64>, Vec<f64>) = column(j).into_iter().unzip();
        let ks = ks_two_sample(&orig, &new)?;
        sites.push(SiteKs {
            curve: k1 + j / interior,
            column: a + 1 + j % interior,
            statistic: ks.statistic,
            p_value: ks.p_value,
            mean_original: mean(&orig),
            mean_resampled: mean(&new),
        });
    }
    let min_p = sites.iter().map(|s| s.p_value).fold(1.0, f64::min);
    let adjusted_p = (min_p * site_count.max(1) as f64).min(1.0);
    let max_statistic = sites.iter().map(|s| s.statistic).fold(0.0, f64::max);
    let moved = runs
        .iter()
        .filter(|(o, n)| o.iter().zip(n).any(|(x, y)| x != y))
        .count();
    let discretization_drift = if cfg.bias_check && site_count > 0 {
        let half = run_replicas(cfg, h, energy, cfg.delta / 2.0)?;
        let drift = (0..site_count)
            .map(|j| {
                let m1 = mean(&runs.iter().map(|r| r.1[j]).collect::<Vec<_>>());
                let m2 = mean(&half.iter().map(|r| r.1[j]).collect::<Vec<_>>());
                (m1 - m2).abs()
            })
            .fold(0.0, f64::max);
        Some(drift)
    } else {
        None
    };
    let report = CheckReport::new(
        "gibbs-invariance",
        cfg.replicas as u64,
        adjusted_p - ALPHA,
        0.0,
        "Bonferroni-adjusted KS p-value above 0.001",
    )
    .param("gamma", cfg.gamma)
    .param("K", cfg.k)
    .param("curves", cfg.curves)
    .param("columns", cfg.columns)
    .param("delta", cfg.delta)
    .param("sweeps", cfg.sweeps)
    .seed(cfg.seed)
    .details(serde_json::json!({
        "max_ks_statistic": max_statistic,
        "adjusted_p": adjusted_p,
        "replicas_changed": moved,
        "discretization_drift": discretization_drift,
    }));
    Ok(InvarianceReport {
        sites,
        max_statistic,
        adjusted_p,
        changed_fraction: moved as f64 / cfg.replicas as f64,
        discretization_drift,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::FnEnergy;
    use crate::special::ln_gamma;

    fn cfg() -> InvarianceConfig {
        InvarianceConfig {
            gamma: 3.0,
            k: 3,
            curves: (1, 2),
            columns: (4, 7),
            replicas: 300,
            delta: 0.05,
            sweeps: 2000,
            seed: 17,
            bias_check: false,
        }
    }

    #[test]
    fn window_validation() {
        let (h, rw) = polymer_hamiltonians(3.0).unwrap();
        let mut c = cfg();
        c.columns = (2, 5);
        assert!(matches!(gibbs_invariance_test(&c, &h, &rw), Err(Error::OutsideDefinedRegion(_))));
    }

    #[test]
    fn no_interior_means_identical() {
        let (h, rw) = polymer_hamiltonians(3.0).unwrap();
        let mut c = cfg();
        c.columns = (4, 5);
        let r = gibbs_invariance_test(&c, &h, &rw).unwrap();
        assert!(r.sites.is_empty());
        assert!(r.report.pass);
    }

    #[test]
    fn correct_pair_passes_and_wrong_pair_fails() {
        let (h, rw) = polymer_hamiltonians(3.0).unwrap();
        let good = gibbs_invariance_test(&cfg(), &h, &rw).unwrap();
        assert!(good.report.pass, "{:?}", good.sites);
        let g = 3.0;
        let wrong = FnEnergy(move |x: f64| ln_gamma(g) + g * x);
        let bad = gibbs_invariance_test(&cfg(), &h, &wrong).unwrap();
        assert!(!bad.report.pass, "{:?} {}", bad.sites, bad.report.details);
    }
}
