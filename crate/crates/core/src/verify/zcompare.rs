use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmt::{a4_walk, WalkFamily};
use super::CheckReport;
use crate::bridge::sample_brownian_bridge;
use crate::ensemble::{brownian_boltzmann_log_weight, Boundary, Grid, LineEnsemble, LocalHamiltonian, Shift};
use crate::error::{Error, Result};
use crate::mcmc::{estimate_log_z_seeded, LogZEstimate};
use crate::seed::rng_for;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZComparisonConfig {
    pub ns: Vec<usize>,
    pub samples: usize,
    /// Constant lower boundary `g` (the upper boundary is `+∞`).
    pub lower: f64,
    /// Grid points for the Brownian side.
    pub brownian_points: usize,
    pub family: WalkFamily,
    pub delta0: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZRow {
    pub n: usize,
    pub discrete: LogZEstimate,
    /// `|Ẑ_N − Ẑ_∞|` on the linear scale.
    pub gap: f64,
    pub joint_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZComparisonReport {
    pub brownian: LogZEstimate,
    pub rows: Vec<ZRow>,
    pub report: CheckReport,
}

const CHUNK: usize = 1024;

/// Errors unless both templates describe the same interval, endpoints and boundaries.
pub fn check_matching_boundaries(a: &LineEnsemble, b: &LineEnsemble) -> Result<()> {
    let close = |x: f64, y: f64| x == y || (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
    let same_interval = close(a.grid().origin(), b.grid().origin()) && close(a.grid().end(), b.grid().end());
    let ends = |l: &LineEnsemble| (l.entrance(), l.exit());
    let (ea, xa) = ends(a);
    let (eb, xb) = ends(b);
    let same_ends = ea.len() == eb.len() && ea.iter().zip(&eb).chain(xa.iter().zip(&xb)).all(|(x, y)| close(*x, *y));
    let same_bounds = match (a.upper(), b.upper(), a.lower(), b.lower()) {
        (Boundary::Constant(u1), Boundary::Constant(u2), Boundary::Constant(l1), Boundary::Constant(l2)) => {
            close(*u1, *u2) && close(*l1, *l2)
        }
        _ => false,
    };
    if same_interval && same_ends && same_bounds {
        Ok(())
    } else {
        Err(Error::Mismatch(
            "discrete and Brownian sides need the same interval, endpoints and constant boundaries".into(),
        ))
    }
}

fn template(points: usize, lower: f64) -> Result<LineEnsemble> {
    LineEnsemble::new(
        Grid::new(0.0, 1.0 / (points - 1) as f64, points)?,
        1,
        vec![vec![0.0; points]],
        Boundary::plus_infinity(),
        Boundary::Constant(lower),
    )
}

fn brownian_log_z(t: &LineEnsemble, samples: usize, seed: u64) -> Result<LogZEstimate> {
    let points = t.grid().count();
    let chunks: Vec<(usize, usize)> = (0..samples)
        .step_by(CHUNK)
        .enumerate()
        .map(|(c, s)| (c, (samples - s).min(CHUNK)))
        .collect();
    let parts = chunks
        .par_iter()
        .map(|&(c, len)| {
            let mut rng = rng_for(seed, "z-brownian", c as u64);
            let mut l = t.clone();
            (0..len)
                .map(|_| {
                    let path = sample_brownian_bridge(1.0, 0.0, points, &mut rng)?;
                    for (i, v) in path.into_iter().enumerate() {
                        l.set(1, i, v)?;
                    }
                    brownian_boltzmann_log_weight(&l)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LogZEstimate::from_log_weights(&parts.concat()))
}

/// One curve on `[0, 1]` pinned at 0, `f ≡ +∞`, `g ≡ lower`: the discrete
/// normalizing constant with `H^N = (1/N)·exp(a₆ − a₂)` at mesh `1/N` against
/// the Brownian one with `H(x) = eˣ`.
///
/// Passes when the gap is non-increasing in `N` and the last gap is below
/// three joint standard errors.
pub fn z_comparison_check(cfg: &ZComparisonConfig) -> Result<ZComparisonReport> {
    if cfg.ns.is_empty() {
        return Err(Error::param("ns", "need at least one N"));
    }
    if cfg.samples < 2 {
        return Err(Error::param("samples", "need at least 2"));
    }
    if cfg.brownian_points < 2 {
        return Err(Error::param("brownian_points", "need at least 2"));
    }
    if !cfg.lower.is_finite() {
        return Err(Error::param("lower", "must be finite"));
    }
    let bt = template(cfg.brownian_points, cfg.lower)?;
    let brownian = brownian_log_z(&bt, cfg.samples, cfg.seed)?;
    let zb = brownian.log_z.exp();
    let seb = zb * brownian.stderr;
    let mut rows = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        if n < 2 {
            return Err(Error::param("ns", "each N must be at least 2"));
        }
        let dt = template(n + 1, cfg.lower)?;
        check_matching_boundaries(&dt, &bt)?;
        let h = LocalHamiltonian::exponential(1.0 / n as f64, Shift::After)?;
        let (law, _) = a4_walk(cfg.family, n, cfg.delta0)?;
        let est = estimate_log_z_seeded(&dt, &h, &law, cfg.samples, crate::seed::derive_seed(cfg.seed, "z-discrete", n as u64))?;
        let zn = est.log_z.exp();
        let sen = zn * est.stderr;
        rows.push(ZRow {
            n,
            gap: (zn - zb).abs(),
            joint_stderr: (sen * sen + seb * seb).sqrt(),
            discrete: est,
        });
    }
    let last = rows.last().expect("non-empty");
    let mut margin = 3.0 * last.joint_stderr - last.gap;
    for w in rows.windows(2) {
        margin = margin.min(w[0].gap - w[1].gap);
    }
    let mut report = CheckReport::new(
        "z-comparison",
        cfg.samples as u64,
        margin,
        0.0,
        "gap non-increasing in N and final gap below 3 joint standard errors",
    )
    .param("ns", &cfg.ns)
    .param("samples", cfg.samples)
    .param("lower", cfg.lower)
    .param("brownian_points", cfg.brownian_points)
    .param("family", cfg.family)
    .seed(cfg.seed)
    .details(serde_json::json!({
        "brownian_z": zb,
        "gaps": rows.iter().map(|r| r.gap).collect::<Vec<_>>(),
        "joint_stderr": rows.iter().map(|r| r.joint_stderr).collect::<Vec<_>>(),
    }));
    // Noise larger than the signal: the comparison cannot resolve anything.
    if !(last.joint_stderr.is_finite()) || 3.0 * last.joint_stderr > 0.5 * zb {
        report = report.mark_inconclusive();
    }
    Ok(ZComparisonReport { brownian, rows, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatched_boundaries_are_rejected() {
        let a = template(5, -1.0).unwrap();
        let b = template(9, -1.0).unwrap();
        assert!(check_matching_boundaries(&a, &b).is_ok());
        let c = template(9, -2.0).unwrap();
        assert!(check_matching_boundaries(&a, &c).is_err());
        let mut d = template(9, -1.0).unwrap();
        d.set(1, 8, 0.5).unwrap();
        assert!(check_matching_boundaries(&a, &d).is_err());
    }

    #[test]
    fn far_boundary_gives_tiny_gap() {
        // g far below: both weights are essentially 1.
        let cfg = ZComparisonConfig {
            ns: vec![16, 32],
            samples: 2000,
            lower: -40.0,
            brownian_points: 65,
            family: WalkFamily::LogGammaShapeOne,
            delta0: 0.1,
            seed: 3,
        };
        let r = z_comparison_check(&cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.gap < 1e-12));
        assert!(r.brownian.log_z.abs() < 1e-12);
    }
}
