use serde::Serialize;

use crate::ensemble::{IncrementEnergy, RWHamiltonian};
use crate::error::{Error, Result};
use crate::stats::logsumexp;

/// Increment law supported on `δ·{jmin, ..., jmax}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteIncrementLaw {
    delta: f64,
    jmin: i64,
    jmax: i64,
    log_probs: Vec<f64>,
}

const LATTICE_TOL: f64 = 1e-6;

impl DiscreteIncrementLaw {
    /// `log P(X = jδ) = −H(jδ) − log C` for `|jδ| ≤ M`.
    pub fn discretize(h: &RWHamiltonian<f64>, delta: f64, m: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::param("delta", format!("must be positive, got {delta}")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::param("M", format!("must be positive, got {m}")));
        }
        if delta > 2.0 * m {
            return Err(Error::EmptySupport(format!("delta {delta} exceeds 2M = {}", 2.0 * m)));
        }
        let jmax = (m / delta + 1e-9).floor() as i64;
        let weights: Vec<f64> = (-jmax..=jmax).map(|j| -h.evaluate(j as f64 * delta)).collect();
        Self::from_log_weights(delta, -jmax, weights)
    }

    /// Normalizes unnormalized log-weights given for `j = jmin, jmin+1, ...`.
    /// Leading and trailing `−∞` entries are trimmed from the support.
    pub fn from_log_weights(delta: f64, jmin: i64, log_weights: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::param("delta", format!("must be positive, got {delta}")));
        }
        if log_weights.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::NotANumber("increment log-weights"));
        }
        let first = log_weights.iter().position(|x| x.is_finite());
        let last = log_weights.iter().rposition(|x| x.is_finite());
        let (first, last) = match (first, last) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::EmptySupport("all log-weights are -inf".into())),
        };
        let mut lp = log_weights[first..=last].to_vec();
        let c = logsumexp(&lp);
        for x in &mut lp {
            *x -= c;
        }
        let jmin = jmin + first as i64;
        Ok(Self {
            delta,
            jmin,
            jmax: jmin + lp.len() as i64 - 1,
            log_probs: lp,
        })
    }

    pub fn from_probs(delta: f64, jmin: i64, probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::param("probs", "probabilities must be finite and nonnegative"));
        }
        Self::from_log_weights(delta, jmin, probs.iter().map(|p| p.ln()).collect())
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn jmin(&self) -> i64 {
        self.jmin
    }

    pub fn jmax(&self) -> i64 {
        self.jmax
    }

    pub fn support_len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|x| x.exp()).collect()
    }

    #[inline]
    pub fn log_prob(&self, j: i64) -> f64 {
        if j < self.jmin || j > self.jmax {
            f64::NEG_INFINITY
        } else {
            self.log_probs[(j - self.jmin) as usize]
        }
    }

    /// Number of lattice steps in `dx`, if `dx` is on the lattice.
    #[inline]
    pub fn lattice_steps(&self, dx: f64) -> Option<i64> {
        let x = dx / self.delta;
        let r = x.round();
        ((x - r).abs() <= LATTICE_TOL && r.abs() < 9.0e15).then_some(r as i64)
    }

    /// Smallest second difference of `−log p` over the support (`+∞` if the
    /// support has fewer than three points).
    pub fn min_second_difference(&self) -> f64 {
        self.log_probs
            .windows(3)
            .map(|w| -w[0] + 2.0 * w[1] - w[2])
            .fold(f64::INFINITY, f64::min)
    }

    /// `−log p` convex on the support up to `tol`, i.e. the law is log-concave.
    pub fn is_discretely_convex(&self, tol: f64) -> bool {
        self.min_second_difference() >= -tol
    }

    /// Drops end points whose probability is below `rel` times the largest
    /// one, then renormalizes.
    pub fn trimmed(&self, rel: f64) -> Self {
        let top = self.log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cut = top + rel.ln();
        let first = self.log_probs.iter().position(|&x| x >= cut).unwrap_or(0);
        let last = self.log_probs.iter().rposition(|&x| x >= cut).unwrap_or(self.log_probs.len() - 1);
        Self::from_log_weights(self.delta, self.jmin + first as i64, self.log_probs[first..=last].to_vec())
            .expect("the mode survives trimming")
    }

    /// Law of `−X`.
    pub fn reflected(&self) -> Self {
        let mut lp = self.log_probs.clone();
        lp.reverse();
        Self {
            delta: self.delta,
            jmin: -self.jmax,
            jmax: -self.jmin,
            log_probs: lp,
        }
    }

    /// Law of `s·X` for `s > 0` (same weights on a rescaled lattice).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::param("scale", format!("must be positive, got {s}")));
        }
        Ok(Self {
            delta: self.delta * s,
            ..self.clone()
        })
    }

    /// Exponential tilt: weights `p_j e^{θ jδ}`, renormalized.
    pub fn tilted(&self, theta: f64) -> Self {
        let w: Vec<f64> = self
            .log_probs
            .iter()
            .enumerate()
            .map(|(i, lp)| lp + theta * (self.jmin + i as i64) as f64 * self.delta)
            .collect();
        Self::from_log_weights(self.delta, self.jmin, w).expect("tilt keeps the support")
    }

    /// Tilt whose mean is `target` (clamped strictly inside the support hull).
    pub fn tilted_to_mean(&self, target: f64) -> Self {
        let lo = self.jmin as f64 * self.delta;
        let hi = self.jmax as f64 * self.delta;
        if self.support_len() == 1 || !(target > lo && target < hi) {
            return self.clone();
        }
        let span = (hi - lo).max(self.delta);
        let (mut a, mut b) = (-1.0 / self.delta, 1.0 / self.delta);
        while self.tilted(a).mean() > target {
            a *= 2.0;
            if a.abs() > 1e6 / span {
                return self.clone();
            }
        }
        while self.tilted(b).mean() < target {
            b *= 2.0;
            if b.abs() > 1e6 / span {
                return self.clone();
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.tilted(m).mean() < target {
                a = m;
            } else {
                b = m;
            }
            if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
                break;
            }
        }
        self.tilted(0.5 * (a + b))
    }

    pub fn mean(&self) -> f64 {
        self.log_probs
            .iter()
            .enumerate()
            .map(|(i, lp)| lp.exp() * (self.jmin + i as i64) as f64 * self.delta)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.log_probs
            .iter()
            .enumerate()
            .map(|(i, lp)| {
                let x = (self.jmin + i as i64) as f64 * self.delta - m;
                lp.exp() * x * x
            })
            .sum()
    }
}

impl IncrementEnergy for DiscreteIncrementLaw {
    /// `−log P(X = dx)`, `+∞` off the lattice or off the support.
    #[inline]
    fn energy(&self, dx: f64) -> f64 {
        match self.lattice_steps(dx) {
            Some(j) => -self.log_prob(j),
            None => f64::INFINITY,
        }
    }
}
