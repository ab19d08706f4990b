use rand::Rng;

use crate::bridge::{BridgeSampler, DiscreteIncrementLaw};
use crate::ensemble::{boltzmann_log_weight, LineEnsemble, LocalHamiltonian};
use crate::error::{Error, Result};

/// Free draws tried when the lowest trajectory has zero weight.
const FALLBACK_DRAWS: usize = 64;

fn samplers(template: &LineEnsemble, law: &DiscreteIncrementLaw) -> Result<Vec<BridgeSampler>> {
    let steps = template.grid().count() - 1;
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

/// Pointwise-lowest bridge of positive probability for every curve, keeping
/// the template's endpoints and boundaries.
pub fn lowest_trajectory(template: &LineEnsemble, law: &DiscreteIncrementLaw) -> Result<LineEnsemble> {
    let n = template.grid().count();
    if n < 3 {
        return Ok(template.clone());
    }
    let mut curves = Vec::with_capacity(template.curve_count());
    for s in samplers(template, law)? {
        let mut v = 0i64;
        let mut path = vec![s.start()];
        for m in 1..n - 1 {
            let (lo, hi) = s.state_range(m);
            v = (lo.max(v + law.jmin())..=hi.min(v + law.jmax()))
                .find(|&w| law.log_prob(w - v) > f64::NEG_INFINITY && s.log_h(m, w) > f64::NEG_INFINITY)
                .expect("a feasible bridge has a feasible successor");
            path.push(s.value(v));
        }
        path.push(s.end());
        curves.push(path);
    }
    with_curves(template, curves)
}

/// Starting state for a chain: the lowest trajectory if it has positive
/// weight, otherwise the best of 64 independent free bridge draws.
pub fn initialize<R: Rng + ?Sized>(
    template: &LineEnsemble,
    h: &LocalHamiltonian<f64>,
    law: &DiscreteIncrementLaw,
    rng: &mut R,
) -> Result<LineEnsemble> {
    let low = lowest_trajectory(template, law)?;
    if boltzmann_log_weight(&low, h, None)? > f64::NEG_INFINITY {
        return Ok(low);
    }
    let samplers = samplers(template, law)?;
    let mut best: Option<(f64, LineEnsemble)> = None;
    for _ in 0..FALLBACK_DRAWS {
        let l = with_curves(template, samplers.iter().map(|s| s.sample(rng)).collect())?;
        let w = boltzmann_log_weight(&l, h, None)?;
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            best = Some((w, l));
        }
    }
    match best {
        Some((w, l)) if w > f64::NEG_INFINITY => Ok(l),
        _ => Err(Error::StuckInitialization),
    }
}
