//! Weak-noise scaling of the log-gamma line ensemble: the scaled Hamiltonian
//! pair, the scaled ensemble itself, the tilting parameters, and stationarity
//! statistics of the top curve.

mod ensemble;
mod stationarity;
mod tilt;

pub use ensemble::{scale_ensemble, ScaledEnsemble};
pub use stationarity::{stationarity_statistics, KsPair, SiteSummary, StationarityReport};
pub use tilt::{tilt_cumulant_check, tilt_parameters, CumulantCheck, TiltParameters};

use serde::Serialize;

use crate::ensemble::{LocalHamiltonian, RWHamiltonian, Shift};
use crate::error::{Error, Result};
use crate::special::{digamma, trigamma};

/// `(Ψ₀(γ), Ψ₁(γ))`.
pub fn digamma_trigamma(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", format!("must be positive, got {gamma}")));
    }
    Ok((digamma(gamma), trigamma(gamma)))
}

fn check_n(n: usize, min: usize) -> Result<f64> {
    if n < min {
        return Err(Error::param("N", format!("must be at least {min}, got {n}")));
    }
    Ok((n as f64).sqrt())
}

/// Centering of the scaled random walk, `log(√N − 1) − log 2`.
pub fn rw_centering(n: usize) -> Result<f64> {
    let s = check_n(n, 4)?;
    Ok((s - 1.0).ln() - std::f64::consts::LN_2)
}

/// `q(N) = log(√N − 1) − log 2 − Ψ₀(√N)`, the mean increment of the scaled walk.
pub fn q(n: usize) -> Result<f64> {
    Ok(rw_centering(n)? - digamma((n as f64).sqrt()))
}

/// Interaction and random-walk Hamiltonians of the scaled ensemble at noise level `N`.
#[derive(Clone)]
pub struct ScaledHamiltonians {
    pub n: usize,
    /// `(2/(√N − 1))·exp(a₆ − a₂)`.
    pub interaction: LocalHamiltonian<f64>,
    /// `log Γ(√N) + √N(x − c) + exp(−(x − c))` with `c = log(√N − 1) − log 2`.
    pub random_walk: RWHamiltonian<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaledHamiltoniansInfo {
    pub n: usize,
    pub interaction_scale: f64,
    pub rw_shape: f64,
    pub rw_centering: f64,
    pub q: f64,
}

impl ScaledHamiltonians {
    pub fn info(&self) -> ScaledHamiltoniansInfo {
        let s = (self.n as f64).sqrt();
        ScaledHamiltoniansInfo {
            n: self.n,
            interaction_scale: 2.0 / (s - 1.0),
            rw_shape: s,
            rw_centering: self.random_walk.center(),
            q: self.random_walk.mean(),
        }
    }
}

pub fn scaled_hamiltonians(n: usize) -> Result<ScaledHamiltonians> {
    let s = check_n(n, 4)?;
    Ok(ScaledHamiltonians {
        n,
        interaction: LocalHamiltonian::exponential(2.0 / (s - 1.0), Shift::After)?,
        random_walk: RWHamiltonian::log_gamma(s, rw_centering(n)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_line;

    #[test]
    fn digamma_recurrence_and_errors() {
        for g in [0.5, 1.0, 7.3] {
            let (a, t) = digamma_trigamma(g).unwrap();
            let (b, _) = digamma_trigamma(g + 1.0).unwrap();
            assert!((b - a - 1.0 / g).abs() < 1e-12);
            assert!(t > 0.0);
        }
        assert!(digamma_trigamma(0.0).is_err());
        assert!(digamma_trigamma(-2.0).is_err());
    }

    #[test]
    fn digamma_tracks_log_at_rate_inverse_sqrt() {
        let mut worst: f64 = 0.0;
        for n in [16usize, 64, 256, 1024, 4096] {
            let s = (n as f64).sqrt();
            worst = worst.max((digamma(s) - s.ln()).abs() * s);
        }
        assert!(worst < 1.0, "{worst}");
    }

    #[test]
    fn interaction_at_n4() {
        let h = scaled_hamiltonians(4).unwrap();
        assert_eq!(h.interaction.evaluate(&[0.0; 6]), 2.0);
        assert!(scaled_hamiltonians(3).is_err());
    }

    #[test]
    fn rw_density_normalized_with_known_mean() {
        for n in [16usize, 64, 256] {
            let h = scaled_hamiltonians(n).unwrap();
            let rw = &h.random_walk;
            let c = rw.center();
            let mass = integrate_line(|x| (-rw.evaluate(x)).exp(), c, 1e-13);
            assert!((mass - 1.0).abs() < 1e-8);
            let m = integrate_line(|x| x * (-rw.evaluate(x)).exp(), c, 1e-13);
            assert!((m - q(n).unwrap()).abs() < 1e-8, "N={n}: {m} vs {}", q(n).unwrap());
        }
    }

    #[test]
    fn rw_hamiltonian_is_convex() {
        let h = scaled_hamiltonians(64).unwrap();
        let rw = &h.random_walk;
        let e = 1e-3;
        for j in -400..=400 {
            let x = rw.center() + j as f64 * 0.01;
            let d2 = rw.evaluate(x + e) - 2.0 * rw.evaluate(x) + rw.evaluate(x - e);
            assert!(d2 >= -1e-9);
        }
    }
}
