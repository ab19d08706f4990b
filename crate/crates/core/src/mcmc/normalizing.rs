use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bridge::{BridgeSampler, DiscreteIncrementLaw};
use crate::ensemble::{boltzmann_log_weight, LineEnsemble, LocalHamiltonian};
use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::stats::logsumexp;

#[derive(Debug, Clone, Serialize)]
pub struct LogZEstimate {
    pub log_z: f64,
    /// Delta-method standard error of `log_z`.
    pub stderr: f64,
    pub samples: usize,
    /// Samples with positive weight.
    pub n_finite: usize,
    pub diagnostic: Option<String>,
}

fn samplers(template: &LineEnsemble, law: &DiscreteIncrementLaw) -> Result<Vec<BridgeSampler>> {
    let steps = template.grid().count().checked_sub(1).filter(|&s| s > 0).ok_or_else(|| {
        Error::param("grid", "normalizing constants need at least two sites")
    })?;
    template
        .curves()
        .map(|c| BridgeSampler::new(law.clone(), steps, c[0], c[steps]))
        .collect()
}

fn with_curves(template: &LineEnsemble, curves: Vec<Vec<f64>>) -> Result<LineEnsemble> {
    LineEnsemble::new(
        *template.grid(),
        template.first_index(),
        curves,
        template.upper().clone(),
        template.lower().clone(),
    )
}

/// Monte Carlo `log Z = log E_free[W]` over independent free bridges with the
/// template's endpoints and boundaries.
pub fn estimate_log_z<R: Rng + ?Sized>(
    template: &LineEnsemble,
    h: &LocalHamiltonian<f64>,
    law: &DiscreteIncrementLaw,
    samples: usize,
    rng: &mut R,
) -> Result<LogZEstimate> {
    if samples < 2 {
        return Err(Error::InsufficientData {
            what: "free bridge samples",
            needed: 2,
            got: samples,
        });
    }
    let samplers = samplers(template, law)?;
    let mut logw = Vec::with_capacity(samples);
    for _ in 0..samples {
        let l = with_curves(template, samplers.iter().map(|s| s.sample(rng)).collect())?;
        logw.push(boltzmann_log_weight(&l, h, None)?);
    }
    Ok(LogZEstimate::from_log_weights(&logw))
}

/// Like [`estimate_log_z`], with samples drawn in parallel chunks whose
/// generators derive from `(seed, chunk)`; the result does not depend on the
/// number of worker threads.
pub fn estimate_log_z_seeded(
    template: &LineEnsemble,
    h: &LocalHamiltonian<f64>,
    law: &DiscreteIncrementLaw,
    samples: usize,
    seed: u64,
) -> Result<LogZEstimate> {
    if samples < 2 {
        return Err(Error::InsufficientData {
            what: "free bridge samples",
            needed: 2,
            got: samples,
        });
    }
    let samplers = samplers(template, law)?;
    let chunks: Vec<(usize, usize)> = (0..samples)
        .step_by(CHUNK)
        .enumerate()
        .map(|(c, start)| (c, (samples - start).min(CHUNK)))
        .collect();
    let parts = chunks
        .par_iter()
        .map(|&(c, len)| {
            let mut rng = rng_for(seed, "log-z", c as u64);
            (0..len)
                .map(|_| {
                    let l = with_curves(template, samplers.iter().map(|s| s.sample(&mut rng)).collect())?;
                    boltzmann_log_weight(&l, h, None)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LogZEstimate::from_log_weights(&parts.concat()))
}

const CHUNK: usize = 1024;

impl LogZEstimate {
    /// `log` of the mean of `exp(logw)`, with delta-method standard error.
    pub fn from_log_weights(logw: &[f64]) -> Self {
        let n = logw.len();
        let n_finite = logw.iter().filter(|w| w.is_finite()).count();
        if n_finite == 0 {
            return LogZEstimate {
                log_z: f64::NEG_INFINITY,
                stderr: f64::NAN,
                samples: n,
                n_finite,
                diagnostic: Some(format!("all {n} sampled weights are zero")),
            };
        }
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = logw.iter().map(|w| (w - top).exp()).collect();
        let m = crate::stats::mean(&scaled);
        let sd = crate::stats::variance(&scaled).sqrt();
        let log_z = logsumexp(logw) - (n as f64).ln();
        LogZEstimate {
            log_z,
            stderr: sd / m / (n as f64).sqrt(),
            samples: n,
            n_finite,
            diagnostic: (n_finite < n / 10).then(|| format!("only {n_finite} of {n} weights are positive")),
        }
    }
}

/// Every bridge path of one curve with its log bridge probability.
fn curve_paths(s: &BridgeSampler, limit: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let law = s.law();
    let steps = s.steps();
    let z = s.log_partition();
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<i64>, f64)> = vec![(vec![0], 0.0)];
    while let Some((path, lp)) = stack.pop() {
        let m = path.len() - 1;
        let v = path[m];
        if m == steps {
            if out.len() >= limit {
                return Err(Error::FeasibilityGuard {
                    count: out.len() + 1,
                    limit,
                });
            }
            out.push((path.iter().map(|&o| s.value(o)).collect::<Vec<_>>(), lp - z));
            continue;
        }
        for j in law.jmin()..=law.jmax() {
            let w = v + j;
            let step = law.log_prob(j);
            if step == f64::NEG_INFINITY || s.log_h(m + 1, w) == f64::NEG_INFINITY {
                continue;
            }
            let mut next = path.clone();
            next.push(w);
            stack.push((next, lp + step));
        }
    }
    for (p, _) in &mut out {
        p[steps] = s.end();
    }
    Ok(out)
}

/// All ensembles of independent bridges matching the template's endpoints,
/// each with its free (product bridge) log-probability. Fails past `limit` states.
pub fn enumerate_bridge_ensembles(
    template: &LineEnsemble,
    law: &DiscreteIncrementLaw,
    limit: usize,
) -> Result<Vec<(LineEnsemble, f64)>> {
    let per_curve: Vec<Vec<(Vec<f64>, f64)>> = samplers(template, law)?
        .iter()
        .map(|s| curve_paths(s, limit))
        .collect::<Result<_>>()?;
    let total = per_curve.iter().try_fold(1usize, |acc, p| acc.checked_mul(p.len()));
    match total {
        Some(t) if t <= limit => {}
        _ => {
            return Err(Error::FeasibilityGuard {
                count: total.unwrap_or(usize::MAX),
                limit,
            })
        }
    }
    let mut out = Vec::with_capacity(total.unwrap_or(0));
    let mut idx = vec![0usize; per_curve.len()];
    loop {
        let curves = idx.iter().zip(&per_curve).map(|(&i, p)| p[i].0.clone()).collect();
        let lp = idx.iter().zip(&per_curve).map(|(&i, p)| p[i].1).sum();
        out.push((with_curves(template, curves)?, lp));
        let mut c = 0;
        loop {
            if c == idx.len() {
                return Ok(out);
            }
            idx[c] += 1;
            if idx[c] < per_curve[c].len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

/// Exact `log Z` by full enumeration of the bridge state space.
pub fn exact_log_z(
    template: &LineEnsemble,
    h: &LocalHamiltonian<f64>,
    law: &DiscreteIncrementLaw,
    limit: usize,
) -> Result<f64> {
    let terms: Vec<f64> = enumerate_bridge_ensembles(template, law, limit)?
        .iter()
        .map(|(l, lp)| Ok(lp + boltzmann_log_weight(l, h, None)?))
        .collect::<Result<_>>()?;
    Ok(logsumexp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{Boundary, Grid, Shift};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> (LineEnsemble, DiscreteIncrementLaw) {
        let law = DiscreteIncrementLaw::from_probs(0.5, -1, &[0.25, 0.5, 0.25]).unwrap();
        let l = LineEnsemble::new(
            Grid::new(0.0, 1.0, 4).unwrap(),
            1,
            vec![vec![0.0, 0.0, 0.0, 0.5]],
            Boundary::Constant(0.5),
            Boundary::minus_infinity(),
        )
        .unwrap();
        (l, law)
    }

    #[test]
    fn enumeration_is_a_probability_distribution() {
        let (l, law) = tiny();
        let all = enumerate_bridge_ensembles(&l, &law, 1000).unwrap();
        // 3 steps from 0 to +1 with jumps in {−1, 0, 1}: 6 paths.
        assert_eq!(all.len(), 6);
        let total: f64 = all.iter().map(|(_, lp)| lp.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(matches!(enumerate_bridge_ensembles(&l, &law, 5), Err(Error::FeasibilityGuard { .. })));
    }

    #[test]
    fn zero_hamiltonian_gives_exact_zero() {
        let (l, law) = tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = estimate_log_z(&l, &LocalHamiltonian::Zero, &law, 100, &mut rng).unwrap();
        assert_eq!(e.log_z, 0.0);
        assert_eq!(e.stderr, 0.0);
        assert!(exact_log_z(&l, &LocalHamiltonian::Zero, &law, 100).unwrap().abs() < 1e-14);
    }

    #[test]
    fn estimate_matches_enumeration() {
        let (l, law) = tiny();
        let h = LocalHamiltonian::exponential(1.0, Shift::Same).unwrap();
        let exact = exact_log_z(&l, &h, &law, 100).unwrap();
        assert!(exact < 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = estimate_log_z(&l, &h, &law, 20_000, &mut rng).unwrap();
        assert!((e.log_z - exact).abs() < 3.0 * e.stderr, "{} vs {exact} ± {}", e.log_z, e.stderr);
    }

    #[test]
    fn all_zero_weights_are_diagnosed() {
        let (l, law) = tiny();
        let h = LocalHamiltonian::custom("never", |_: &[f64; 6]| f64::INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = estimate_log_z(&l, &h, &law, 10, &mut rng).unwrap();
        assert_eq!(e.log_z, f64::NEG_INFINITY);
        assert!(e.diagnostic.is_some());
    }
}
