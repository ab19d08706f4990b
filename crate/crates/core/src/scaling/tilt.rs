use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::integrate_line;
use crate::special::{digamma, ln_gamma, trigamma};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TiltParameters {
    pub xi: f64,
    pub mu: f64,
    /// `|Ψ₀(ξ) − (Ψ₀(√N) + q(N))|`.
    pub residual: f64,
}

/// Solves `Ψ₀(ξ) = Ψ₀(√N) + q(N)` for `ξ ∈ [√N/4, √N]` and sets
/// `μ = σ(ξ)/σ(√N)`, where `σ² = Ψ₁`.
pub fn tilt_parameters(n: usize) -> Result<TiltParameters> {
    let s = super::check_n(n, 16)?;
    // Ψ₀(√N) + q(N) is exactly the random-walk centering.
    let target = super::rw_centering(n)?;
    let f = |x: f64| digamma(x) - target;
    let (mut lo, mut hi) = (s / 4.0, s);
    let (flo, fhi) = (f(lo), f(hi));
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::BracketFailure {
            lo_residual: flo,
            hi_residual: fhi,
        });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= 1e-13 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / trigamma(x);
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let residual = f(x).abs();
    if residual > 1e-10 {
        return Err(Error::BracketFailure {
            lo_residual: f(lo),
            hi_residual: f(hi),
        });
    }
    Ok(TiltParameters {
        xi: x,
        mu: (trigamma(x) / trigamma(s)).sqrt(),
        residual,
    })
}

/// First three cumulants of both sides of the tilting identity, by quadrature.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantCheck {
    pub n: usize,
    pub xi: f64,
    pub mu: f64,
    /// Cumulants of `A = (Y(√N) − m(√N) − q)/σ(√N)` under the exponential
    /// tilt `e^{θA}` with `θ = (ξ − √N)·σ(√N)`.
    pub tilted: [f64; 3],
    /// Cumulants of `B = μ(Y(ξ) − m(ξ))/σ(ξ)`.
    pub target: [f64; 3],
    pub max_error: f64,
}

/// Log-density of `Y(γ) = log G`, `G ~ Gamma(γ, 1)`.
fn log_density(gamma: f64, y: f64) -> f64 {
    gamma * y - y.exp() - ln_gamma(gamma)
}

/// First three cumulants of `a + b·Y` where `Y` has unnormalized log-density `lw`.
fn cumulants(lw: impl Fn(f64) -> f64, center: f64, a: f64, b: f64) -> [f64; 3] {
    let tol = 1e-14;
    let w = |y: f64| lw(y).exp();
    let z = integrate_line(w, center, tol);
    let m1 = integrate_line(|y| y * w(y), center, tol) / z;
    let c2 = integrate_line(|y| (y - m1).powi(2) * w(y), center, tol) / z;
    let c3 = integrate_line(|y| (y - m1).powi(3) * w(y), center, tol) / z;
    [a + b * m1, b * b * c2, b * b * b * c3]
}

/// Checks the tilting identity at the cumulant level: tilting the law of `A`
/// by the parameter above must reproduce the law of `B`.
pub fn tilt_cumulant_check(n: usize) -> Result<CumulantCheck> {
    let s = super::check_n(n, 16)?;
    let tp = tilt_parameters(n)?;
    let q = super::q(n)?;
    let sd = trigamma(s).sqrt();
    // Tilting A by θ·A is tilting Y(√N) by (ξ − √N)·Y.
    let theta_y = tp.xi - s;
    let tilted = cumulants(|y| log_density(s, y) + theta_y * y, tp.xi.ln(), -(digamma(s) + q) / sd, 1.0 / sd);
    let sx = trigamma(tp.xi).sqrt();
    let target = cumulants(|y| log_density(tp.xi, y), tp.xi.ln(), -tp.mu * digamma(tp.xi) / sx, tp.mu / sx);
    let max_error = tilted.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(CumulantCheck {
        n,
        xi: tp.xi,
        mu: tp.mu,
        tilted,
        target,
        max_error,
    })
}
