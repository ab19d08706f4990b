use rand::SeedableRng;
use serde::Serialize;

use super::chain::{draw_move, ChainState, Escape};
use super::{ChainConfig, GibbsTarget};
use crate::ensemble::{Boundary, Grid, LineEnsemble};
use crate::error::{Error, Result};
use crate::seed::Rng as ChainRng;

#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    /// Proposals applied to each chain.
    pub updates: u64,
    /// Updates after which some site had `upper < lower`.
    pub violations: u64,
    pub upper: LineEnsemble,
    pub lower: LineEnsemble,
}

fn check_boundary(name: &str, hi: &Boundary<f64>, lo: &Boundary<f64>, n: usize) -> Result<()> {
    for i in 0..n {
        let (a, b) = (hi.at(i), lo.at(i));
        if a.is_nan() || b.is_nan() || a < b {
            return Err(Error::Unordered(format!("{name} boundary at site {i}: {a} < {b}")));
        }
    }
    Ok(())
}

/// Runs two chains on the same target with identical proposal streams and
/// counts ordering violations after every update.
///
/// `upper` must dominate `lower` pointwise (curves and boundaries), and every
/// value of `upper` must lie on the lattice `lower + δℤ`, so both chains move
/// on a common lattice and the ordering check is exact. The dominance this
/// tests runs one way: higher boundary data should keep `upper` above `lower`.
pub fn monotone_coupled_run(
    upper: &LineEnsemble,
    lower: &LineEnsemble,
    target: &GibbsTarget<'_>,
    cfg: &ChainConfig,
) -> Result<CouplingReport> {
    cfg.validate()?;
    if upper.grid() != lower.grid()
        || upper.first_index() != lower.first_index()
        || upper.curve_count() != lower.curve_count()
    {
        return Err(Error::Mismatch("coupled ensembles need the same grid and curve labels".into()));
    }
    let n = upper.grid().count();
    let k = upper.curve_count();
    check_boundary("upper", upper.upper(), lower.upper(), n)?;
    check_boundary("lower", upper.lower(), lower.lower(), n)?;

    let mut lo = ChainState::new(lower, cfg.delta);
    let mut hi = ChainState::on_anchors_of(upper, &lo)?;
    if let Some(s) = hi.off.iter().zip(&lo.off).position(|(a, b)| a < b) {
        return Err(Error::Unordered(format!(
            "initial states: curve {} site {} has upper < lower",
            upper.first_index() + s / n,
            s % n
        )));
    }
    if n < 3 {
        return Ok(CouplingReport {
            updates: 0,
            violations: 0,
            upper: upper.clone(),
            lower: lower.clone(),
        });
    }

    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    let mut esc_hi = Escape::new(&hi, target)?;
    let mut esc_lo = Escape::new(&lo, target)?;
    let per_sweep = k * (n - 2);
    let mut crossed = 0usize;
    let (mut updates, mut violations) = (0u64, 0u64);
    for sweep in 0..cfg.sweeps {
        for p in 0..per_sweep {
            let mv = draw_move(&mut rng, cfg.scan, k, n, p);
            let s = hi.slot(mv.r, mv.i);
            let before = hi.off[s] < lo.off[s];
            esc_hi.step(&mut hi, target, mv)?;
            esc_lo.step(&mut lo, target, mv)?;
            let after = hi.off[s] < lo.off[s];
            match (before, after) {
                (false, true) => crossed += 1,
                (true, false) => crossed -= 1,
                _ => {}
            }
            updates += 1;
            if crossed > 0 {
                violations += 1;
            }
        }
        if sweep == 0 && (esc_hi.stuck || esc_lo.stuck) {
            return Err(Error::StuckInitialization);
        }
    }
    Ok(CouplingReport {
        updates,
        violations,
        upper: hi.into_ensemble(upper)?,
        lower: lo.into_ensemble(lower)?,
    })
}

/// A single-curve configuration where the shared-uniform Metropolis rule can
/// break the ordering: with `upper ≥ lower` at the neighbours and equal values
/// at the proposed site, the lower chain accepts a move that the upper chain
/// rejects (or the reverse for downward moves).
#[derive(Debug, Clone, Serialize)]
pub struct RatioViolation {
    /// `(left, centre, right)` of the dominating chain.
    pub upper: [f64; 3],
    pub lower: [f64; 3],
    pub direction: i64,
    pub log_ratio_upper: f64,
    pub log_ratio_lower: f64,
}

/// Scans 3-site, 1-curve configurations with neighbours in `δ·{-reach..=reach}`
/// for a violation of the ratio inequality behind the monotone coupling.
/// Returns the worst one found.
pub fn search_ratio_violation(target: &GibbsTarget<'_>, delta: f64, reach: i64) -> Result<Option<RatioViolation>> {
    let grid = Grid::new(0.0, 1.0, 3)?;
    let state = |l: f64, r: f64| -> Result<ChainState> {
        let e = LineEnsemble::unbounded(grid, 1, vec![vec![l, 0.0, r]])?;
        Ok(ChainState::new(&e, delta))
    };
    let mut worst: Option<RatioViolation> = None;
    let mut worst_gap = 0.0;
    let vals: Vec<f64> = (-reach..=reach).map(|j| j as f64 * delta).collect();
    for &l1 in &vals {
        for &l2 in vals.iter().filter(|&&v| v <= l1) {
            for &r1 in &vals {
                for &r2 in vals.iter().filter(|&&v| v <= r1) {
                    let mut hi = state(l1, r1)?;
                    let mut lo = state(l2, r2)?;
                    for dir in [1i64, -1] {
                        let a = hi.log_ratio(target, 1, 1, dir)?;
                        let b = lo.log_ratio(target, 1, 1, dir)?;
                        // Upward: lower accepting forces upper to accept. Downward: the reverse.
                        let gap = if dir == 1 { b.min(0.0) - a.min(0.0) } else { a.min(0.0) - b.min(0.0) };
                        if gap > 1e-12 && gap > worst_gap {
                            worst_gap = gap;
                            worst = Some(RatioViolation {
                                upper: [l1, 0.0, r1],
                                lower: [l2, 0.0, r2],
                                direction: dir,
                                log_ratio_upper: a,
                                log_ratio_lower: b,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}
