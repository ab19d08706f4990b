use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Scalar;
use crate::special::{digamma, ln_gamma, trigamma};

/// Which lower-row site the exponential Hamiltonian compares against the
/// upper row's middle value `a₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    /// `a₄`, the lower row one site to the left.
    Before,
    /// `a₅`, the lower row at the same site.
    Same,
    /// `a₆`, the lower row one site to the right.
    After,
}

impl Shift {
    fn slot(self) -> usize {
        match self {
            Shift::Before => 3,
            Shift::Same => 4,
            Shift::After => 5,
        }
    }

    pub fn offset(self) -> i8 {
        self.slot() as i8 - 4
    }
}

type LocalFn<T> = Arc<dyn Fn(&[T; 6]) -> T + Send + Sync>;

/// Nonnegative function of the six values around one grid rectangle.
///
/// The argument is `(upper(i−1), upper(i), upper(i+1), lower(i−1), lower(i), lower(i+1))`.
#[derive(Clone)]
pub enum LocalHamiltonian<T = f64> {
    Zero,
    /// `scale · exp(a_shift − a₂)`.
    Exponential { scale: T, shift: Shift },
    Custom { name: String, f: LocalFn<T> },
}

/// Serializable description of a [`LocalHamiltonian`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HamiltonianKind {
    Zero,
    Exponential { scale: f64, shift: i8 },
    Custom { name: String },
}

impl<T: Scalar> fmt::Debug for LocalHamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind())
    }
}

impl<T: Scalar> LocalHamiltonian<T> {
    pub fn exponential(scale: T, shift: Shift) -> Result<Self> {
        if !(scale >= T::zero()) || !scale.is_finite() {
            return Err(Error::param("scale", format!("must be finite and nonnegative, got {scale}")));
        }
        Ok(LocalHamiltonian::Exponential { scale, shift })
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&[T; 6]) -> T + Send + Sync + 'static) -> Self {
        LocalHamiltonian::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn kind(&self) -> HamiltonianKind {
        match self {
            LocalHamiltonian::Zero => HamiltonianKind::Zero,
            LocalHamiltonian::Exponential { scale, shift } => HamiltonianKind::Exponential {
                scale: scale.as_f64(),
                shift: shift.offset(),
            },
            LocalHamiltonian::Custom { name, .. } => HamiltonianKind::Custom { name: name.clone() },
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LocalHamiltonian::Zero)
    }

    /// Evaluates H. With `f ≡ +∞` above or `g ≡ −∞` below, the exponential
    /// kind is exactly zero; an exponent of `+∞` gives `+∞`.
    #[inline]
    pub fn evaluate(&self, a: &[T; 6]) -> T {
        match self {
            LocalHamiltonian::Zero => T::zero(),
            LocalHamiltonian::Exponential { scale, shift } => {
                let lower = a[shift.slot()];
                let upper = a[1];
                if lower == T::neg_infinity() || upper == T::infinity() || *scale == T::zero() {
                    return T::zero();
                }
                *scale * (lower - upper).exp()
            }
            LocalHamiltonian::Custom { f, .. } => f(a),
        }
    }

    /// Like [`evaluate`](Self::evaluate) but rejects NaN and negative values.
    pub fn evaluate_checked(&self, a: &[T; 6]) -> Result<T> {
        let v = self.evaluate(a);
        if v.is_nan() {
            return Err(Error::NotANumber("local Hamiltonian"));
        }
        if v < T::zero() {
            return Err(Error::param("hamiltonian", format!("negative value {v} at {a:?}")));
        }
        Ok(v)
    }
}

/// Serializable description of a [`RWHamiltonian`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RwKind {
    LogGamma { gamma: f64, centering: f64 },
    Quadratic { variance: f64 },
    Custom { name: String },
}

#[derive(Clone)]
enum RwRepr<T> {
    LogGamma { gamma: T, centering: T, ln_gamma_gamma: T },
    Quadratic { variance: T, log_norm: T },
    Custom { name: String, f: Arc<dyn Fn(T) -> T + Send + Sync>, center: T },
}

/// Negative log-density of one random walk increment.
///
/// Every constructor checks `∫ exp(−H) = 1` to 1e-8 (or a few hundred ulps
/// of `T` if coarser) by adaptive quadrature.
#[derive(Clone)]
pub struct RWHamiltonian<T = f64> {
    repr: RwRepr<T>,
}

impl<T: Scalar> fmt::Debug for RWHamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind())
    }
}

const NORMALIZATION_TOL: f64 = 1e-8;

impl<T: Scalar> RWHamiltonian<T> {
    /// `H(x) = lnΓ(γ) + γ(x − c) + e^{−(x − c)}`: the law of `c − log G` for
    /// `G ~ Gamma(γ, 1)`, i.e. `c + log` of an inverse-gamma variable.
    pub fn log_gamma(gamma: T, centering: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be positive and finite, got {gamma}")));
        }
        if !centering.is_finite() {
            return Err(Error::param("centering", "must be finite"));
        }
        Self::checked(RwRepr::LogGamma {
            gamma,
            centering,
            ln_gamma_gamma: ln_gamma(gamma),
        })
    }

    /// Centered Gaussian increments with the given variance.
    pub fn quadratic(variance: T) -> Result<Self> {
        if !(variance > T::zero()) || !variance.is_finite() {
            return Err(Error::param("variance", format!("must be positive and finite, got {variance}")));
        }
        let two_pi = T::lit(2.0) * T::PI();
        Self::checked(RwRepr::Quadratic {
            variance,
            log_norm: T::lit(0.5) * (two_pi * variance).ln(),
        })
    }

    /// Arbitrary negative log-density; `center` should lie near the bulk of the mass.
    pub fn custom(name: impl Into<String>, center: T, f: impl Fn(T) -> T + Send + Sync + 'static) -> Result<Self> {
        Self::checked(RwRepr::Custom {
            name: name.into(),
            f: Arc::new(f),
            center,
        })
    }

    fn checked(repr: RwRepr<T>) -> Result<Self> {
        let h = Self { repr };
        let mass = h.total_mass();
        // Single precision cannot resolve 1e-8; allow a few hundred ulps instead.
        let tol = NORMALIZATION_TOL.max(256.0 * T::epsilon().as_f64());
        if !((mass - 1.0).abs() <= tol) {
            return Err(Error::NotNormalized { mass });
        }
        Ok(h)
    }

    pub fn kind(&self) -> RwKind {
        match &self.repr {
            RwRepr::LogGamma { gamma, centering, .. } => RwKind::LogGamma {
                gamma: gamma.as_f64(),
                centering: centering.as_f64(),
            },
            RwRepr::Quadratic { variance, .. } => RwKind::Quadratic {
                variance: variance.as_f64(),
            },
            RwRepr::Custom { name, .. } => RwKind::Custom { name: name.clone() },
        }
    }

    #[inline]
    pub fn evaluate(&self, x: T) -> T {
        match &self.repr {
            RwRepr::LogGamma {
                gamma,
                centering,
                ln_gamma_gamma,
            } => {
                let u = x - *centering;
                *ln_gamma_gamma + *gamma * u + (-u).exp()
            }
            RwRepr::Quadratic { variance, log_norm } => x * x / (T::lit(2.0) * *variance) + *log_norm,
            RwRepr::Custom { f, .. } => f(x),
        }
    }

    /// A point near the bulk of the increment law.
    pub fn center(&self) -> T {
        match &self.repr {
            RwRepr::LogGamma { gamma, centering, .. } => *centering - digamma(*gamma),
            RwRepr::Quadratic { .. } => T::zero(),
            RwRepr::Custom { center, .. } => *center,
        }
    }

    /// Mean increment (closed form where available, quadrature otherwise).
    pub fn mean(&self) -> f64 {
        match &self.repr {
            RwRepr::LogGamma { .. } | RwRepr::Quadratic { .. } => self.center().as_f64(),
            RwRepr::Custom { .. } => {
                let c = self.center().as_f64();
                quad::integrate_line(|x| x * self.density_f64(x), c, 1e-12)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.repr {
            RwRepr::LogGamma { gamma, .. } => trigamma(*gamma).as_f64(),
            RwRepr::Quadratic { variance, .. } => variance.as_f64(),
            RwRepr::Custom { .. } => {
                let m = self.mean();
                quad::integrate_line(|x| (x - m) * (x - m) * self.density_f64(x), m, 1e-12)
            }
        }
    }

    fn density_f64(&self, x: f64) -> f64 {
        match T::from_f64(x) {
            Some(xt) => {
                let h = self.evaluate(xt).as_f64();
                if h.is_nan() {
                    0.0
                } else {
                    (-h).exp()
                }
            }
            None => 0.0,
        }
    }

    /// `∫ exp(−H(x)) dx` by adaptive quadrature.
    pub fn total_mass(&self) -> f64 {
        let c = self.center().as_f64();
        quad::integrate_line(|x| self.density_f64(x), c, 1e-11)
    }
}

/// Energy of one increment, `−log` of its (possibly unnormalized) weight.
///
/// The Metropolis chain only needs energy differences, so implementors may be
/// off by an additive constant. Off-support increments return `+∞`.
pub trait IncrementEnergy: Send + Sync {
    fn energy(&self, dx: f64) -> f64;
}

impl IncrementEnergy for RWHamiltonian<f64> {
    #[inline]
    fn energy(&self, dx: f64) -> f64 {
        self.evaluate(dx)
    }
}

/// Wraps a closure as an [`IncrementEnergy`], with no normalization check.
pub struct FnEnergy<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> IncrementEnergy for FnEnergy<F> {
    #[inline]
    fn energy(&self, dx: f64) -> f64 {
        (self.0)(dx)
    }
}

type PointFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Extra single-curve penalties felt by the top curve (against `f̂`) and the
/// bottom curve (against `ĝ`) at interior sites.
#[derive(Clone)]
pub struct ExternalHamiltonians<T = f64> {
    pub upper: PointFn<T>,
    pub lower: PointFn<T>,
    /// `f̂`, one value per grid site (only interior sites are used).
    pub upper_curve: Vec<T>,
    /// `ĝ`, one value per grid site (only interior sites are used).
    pub lower_curve: Vec<T>,
}

impl<T: Scalar> ExternalHamiltonians<T> {
    pub fn new(
        upper: impl Fn(T) -> T + Send + Sync + 'static,
        lower: impl Fn(T) -> T + Send + Sync + 'static,
        upper_curve: Vec<T>,
        lower_curve: Vec<T>,
    ) -> Self {
        Self {
            upper: Arc::new(upper),
            lower: Arc::new(lower),
            upper_curve,
            lower_curve,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_conventions() {
        let h = LocalHamiltonian::exponential(2.0, Shift::After).unwrap();
        assert_eq!(h.evaluate(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 2.0);
        let inf = f64::INFINITY;
        assert_eq!(h.evaluate(&[inf, inf, inf, 1.0, 2.0, 3.0]), 0.0);
        assert_eq!(h.evaluate(&[1.0, 2.0, 3.0, -inf, -inf, -inf]), 0.0);
        assert_eq!(h.evaluate(&[0.0, -inf, 0.0, 0.0, 0.0, 0.0]), inf);
        assert!((h.evaluate(&[9.0, 1.0, 9.0, 9.0, 9.0, 0.0]) - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert!(LocalHamiltonian::exponential(-1.0, Shift::Same).is_err());
    }

    #[test]
    fn custom_checked_rejects_nan_and_negative() {
        let h = LocalHamiltonian::custom("neg", |a: &[f64; 6]| a[0]);
        assert!(h.evaluate_checked(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(h.evaluate_checked(&[f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn log_gamma_is_normalized_and_has_known_moments() {
        for &g in &[0.7, 1.0, 3.0, 4.0, 16.0, 32.0] {
            let h = RWHamiltonian::log_gamma(g, 0.3).unwrap();
            assert!((h.total_mass() - 1.0).abs() < 1e-9);
            let m = quad::integrate_line(|x| x * (-h.evaluate(x)).exp(), h.center(), 1e-12);
            assert!((m - h.mean()).abs() < 1e-8, "gamma {g}: {m} vs {}", h.mean());
        }
    }

    #[test]
    fn unnormalized_is_rejected() {
        let r = RWHamiltonian::custom("double", 0.0, |x: f64| x * x / 2.0);
        assert!(matches!(r, Err(Error::NotNormalized { .. })));
        let ok = RWHamiltonian::custom("laplace", 0.0, |x: f64| x.abs() + 2f64.ln());
        assert!(ok.is_ok());
        assert!((ok.unwrap().variance() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_in_single_precision() {
        let h: RWHamiltonian<f32> = RWHamiltonian::quadratic(0.5).unwrap();
        assert!((h.evaluate(1.0) - (1.0 + 0.5 * (std::f32::consts::PI).ln())).abs() < 1e-6);
    }
}
