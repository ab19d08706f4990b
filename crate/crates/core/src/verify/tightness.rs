use serde::Serialize;

use super::CheckReport;
use crate::ensemble::{modulus_of_continuity, Grid};
use crate::error::{Error, Result};

/// Empirical laws of `inf` and `sup` of `L(x) + x²/2` over a window.
#[derive(Debug, Clone, Serialize)]
pub struct WindowExtrema {
    pub window: (f64, f64),
    /// Ascending.
    pub infima: Vec<f64>,
    /// Ascending.
    pub suprema: Vec<f64>,
}

impl WindowExtrema {
    fn check_eps(eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::param("epsilon", format!("must lie in (0, 1], got {eps}")));
        }
        Ok(())
    }

    /// Smallest `R` with empirical `P(inf < −R) < ε`.
    pub fn r_inf(&self, eps: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        let n = self.infima.len();
        // At most c = ⌈εn⌉ − 1 samples may lie strictly below −R.
        let c = ((eps * n as f64).ceil() as usize).saturating_sub(1).min(n - 1);
        Ok(-self.infima[c])
    }

    /// Smallest `R` with empirical `P(sup > R) < ε`.
    pub fn r_sup(&self, eps: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        let n = self.suprema.len();
        let c = ((eps * n as f64).ceil() as usize).saturating_sub(1).min(n - 1);
        Ok(self.suprema[n - 1 - c])
    }

    /// Empirical `P(inf ≤ x)`.
    pub fn inf_cdf(&self, x: f64) -> f64 {
        self.infima.partition_point(|&v| v <= x) as f64 / self.infima.len() as f64
    }

    /// Empirical `P(sup ≤ x)`.
    pub fn sup_cdf(&self, x: f64) -> f64 {
        self.suprema.partition_point(|&v| v <= x) as f64 / self.suprema.len() as f64
    }
}

/// Extrema of `L(x) + x²/2` over `[x0 − w, x0 + w]` for each sampled curve.
pub fn window_extrema(grid: &Grid<f64>, samples: &[Vec<f64>], x0: f64, w: f64) -> Result<WindowExtrema> {
    if samples.is_empty() {
        return Err(Error::InsufficientData {
            what: "curve samples",
            needed: 1,
            got: 0,
        });
    }
    let range = grid.index_range(x0 - w, x0 + w)?;
    let mut infima = Vec::with_capacity(samples.len());
    let mut suprema = Vec::with_capacity(samples.len());
    for s in samples {
        if s.len() != grid.count() {
            return Err(Error::Mismatch("sample length differs from the grid".into()));
        }
        let vals = range.clone().map(|i| {
            let x = grid.site(i);
            s[i] + x * x / 2.0
        });
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        infima.push(lo);
        suprema.push(hi);
    }
    infima.sort_by(f64::total_cmp);
    suprema.sort_by(f64::total_cmp);
    Ok(WindowExtrema {
        window: (x0 - w, x0 + w),
        infima,
        suprema,
    })
}

/// Replicas of the top curves at one noise level.
#[derive(Debug, Clone)]
pub struct TightnessInput {
    pub n: usize,
    pub grid: Grid<f64>,
    /// `replicas[r][curve][site]`.
    pub replicas: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TightnessReport {
    pub radii: Vec<f64>,
    /// `probabilities[input][radius]` = empirical `P(ω(r) ≤ ρ)`.
    pub probabilities: Vec<Vec<f64>>,
    pub ns: Vec<usize>,
    /// Largest tested radius meeting `1 − η` at every `N`.
    pub common_radius: Option<f64>,
    pub report: CheckReport,
}

/// Empirical `P(ω_{[a,b]}(L_1..L_k, r) ≤ ρ)` per input and radius; passes
/// when one radius reaches `1 − η` for every input.
pub fn tightness_proxy(inputs: &[TightnessInput], window: (f64, f64), rho: f64, eta: f64, radii: &[f64]) -> Result<TightnessReport> {
    if inputs.is_empty() || radii.is_empty() {
        return Err(Error::param("inputs", "need at least one input and one radius"));
    }
    if !(rho > 0.0) || !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("rho/eta", "need ρ > 0 and η ∈ (0, 1)"));
    }
    let mut probabilities = Vec::with_capacity(inputs.len());
    for inp in inputs {
        if inp.replicas.is_empty() {
            return Err(Error::InsufficientData {
                what: "replicas",
                needed: 1,
                got: 0,
            });
        }
        let mut row = Vec::with_capacity(radii.len());
        for &r in radii {
            let mut hits = 0usize;
            for rep in &inp.replicas {
                let curves: Vec<&[f64]> = rep.iter().map(Vec::as_slice).collect();
                if modulus_of_continuity(&curves, &inp.grid, window.0, window.1, r)? <= rho {
                    hits += 1;
                }
            }
            row.push(hits as f64 / inp.replicas.len() as f64);
        }
        probabilities.push(row);
    }
    let target = 1.0 - eta;
    let worst_at = |j: usize| probabilities.iter().map(|p| p[j]).fold(1.0, f64::min);
    let common_radius = (0..radii.len())
        .filter(|&j| worst_at(j) >= target)
        .map(|j| radii[j])
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    let best = (0..radii.len()).map(worst_at).fold(0.0, f64::max);
    let ns: Vec<usize> = inputs.iter().map(|i| i.n).collect();
    let report = CheckReport::new(
        "tightness",
        inputs.iter().map(|i| i.replicas.len() as u64).sum(),
        best - target,
        0.0,
        "one radius with probability at least 1 − η at every N",
    )
    .param("ns", &ns)
    .param("rho", rho)
    .param("eta", eta)
    .param("window", window)
    .details(serde_json::json!({ "common_radius": common_radius }));
    Ok(TightnessReport {
        radii: radii.to_vec(),
        probabilities,
        ns,
        common_radius,
        report,
    })
}
