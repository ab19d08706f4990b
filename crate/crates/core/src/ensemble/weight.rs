use std::ops::RangeInclusive;

use super::{ExternalHamiltonians, Grid, LineEnsemble, LocalHamiltonian};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(row_k(i−1), row_k(i), row_k(i+1), row_{k+1}(i−1), row_{k+1}(i), row_{k+1}(i+1))`
/// for `k ∈ k1−1 ..= k2` and an interior site `i`.
pub fn rectangle_neighborhood<T: Scalar>(l: &LineEnsemble<T>, k: usize, i: usize) -> Result<[T; 6]> {
    let n = l.grid().count();
    if i == 0 || i + 1 >= n {
        return Err(Error::IndexOutOfRange {
            what: "interior site",
            index: i as i64,
            valid: format!("1..={}", n as i64 - 2),
        });
    }
    if k + 1 < l.first_index() || k > l.last_index() {
        return Err(Error::IndexOutOfRange {
            what: "rectangle row",
            index: k as i64,
            valid: format!("{}..={}", l.first_index() - 1, l.last_index()),
        });
    }
    Ok([
        l.row_value(k, i - 1)?,
        l.row_value(k, i)?,
        l.row_value(k, i + 1)?,
        l.row_value(k + 1, i - 1)?,
        l.row_value(k + 1, i)?,
        l.row_value(k + 1, i + 1)?,
    ])
}

/// `log W = −Σ_{k=k1−1}^{k2} Σ_{interior i} H(rectangle(L, k, i))`, minus the
/// external single-curve sums when `external` is given.
///
/// Returns `−∞` as soon as one term is `+∞`; NaN anywhere is an error.
pub fn boltzmann_log_weight<T: Scalar>(
    l: &LineEnsemble<T>,
    h: &LocalHamiltonian<T>,
    external: Option<&ExternalHamiltonians<T>>,
) -> Result<T> {
    let n = l.grid().count();
    let mut total = T::zero();
    if !h.is_zero() && n >= 3 {
        let rows = l.padded_rows();
        let row_count = l.curve_count() + 2;
        for r in 0..row_count - 1 {
            let up = &rows[r * n..(r + 1) * n];
            let lo = &rows[(r + 1) * n..(r + 2) * n];
            for i in 1..n - 1 {
                let a = [up[i - 1], up[i], up[i + 1], lo[i - 1], lo[i], lo[i + 1]];
                let v = h.evaluate_checked(&a)?;
                if v == T::infinity() {
                    return Ok(T::neg_infinity());
                }
                total = total + v;
            }
        }
    }
    if let Some(ext) = external {
        if ext.upper_curve.len() != n || ext.lower_curve.len() != n {
            return Err(Error::param("external", "external boundary curves must have one value per site"));
        }
        let top = l.curve(l.first_index())?;
        let bottom = l.curve(l.last_index())?;
        for i in 1..n.saturating_sub(1) {
            let u = (ext.upper)(top[i] - ext.upper_curve[i]);
            let v = (ext.lower)(ext.lower_curve[i] - bottom[i]);
            for x in [u, v] {
                if x.is_nan() {
                    return Err(Error::NotANumber("external Hamiltonian"));
                }
                if x == T::infinity() {
                    return Ok(T::neg_infinity());
                }
                total = total + x;
            }
        }
    }
    if total.is_nan() {
        return Err(Error::NotANumber("Boltzmann weight"));
    }
    Ok(-total)
}

/// Trapezoid approximation of `−Σ_{k=k1−1}^{k2} ∫ exp(row_{k+1}(u) − row_k(u)) du`
/// over the ensemble's grid, with `f ≡ +∞` / `g ≡ −∞` contributing zero.
pub fn brownian_boltzmann_log_weight<T: Scalar>(l: &LineEnsemble<T>) -> Result<T> {
    let n = l.grid().count();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "trapezoid rule grid points",
            needed: 2,
            got: n,
        });
    }
    let rows = l.padded_rows();
    let row_count = l.curve_count() + 2;
    let half = T::lit(0.5);
    let mut total = T::zero();
    for r in 0..row_count - 1 {
        let up = &rows[r * n..(r + 1) * n];
        let lo = &rows[(r + 1) * n..(r + 2) * n];
        let mut s = T::zero();
        for i in 0..n {
            let g = if up[i] == T::infinity() || lo[i] == T::neg_infinity() {
                T::zero()
            } else {
                (lo[i] - up[i]).exp()
            };
            s = s + if i == 0 || i + 1 == n { half * g } else { g };
        }
        total = total + s * l.grid().mesh();
    }
    if total.is_nan() {
        return Err(Error::NotANumber("Brownian Boltzmann weight"));
    }
    Ok(-total)
}

/// Largest `|f(u) − f(t)|` over the given curves and site pairs in `sites`
/// at most `max_lag` sites apart.
pub fn modulus_on_sites<T: Scalar>(curves: &[&[T]], sites: RangeInclusive<usize>, max_lag: usize) -> T {
    let (lo, hi) = (*sites.start(), *sites.end());
    let mut best = T::zero();
    for c in curves {
        for i in lo..=hi {
            let top = (i + max_lag).min(hi);
            for j in i + 1..=top {
                let d = (c[j] - c[i]).abs();
                if d > best {
                    best = d;
                }
            }
        }
    }
    best
}

/// `ω_{[a,b]}(curves, δ)` with `u, t` restricted to grid sites.
pub fn modulus_of_continuity<T: Scalar>(curves: &[&[T]], grid: &Grid<T>, a: T, b: T, delta: T) -> Result<T> {
    if !(delta > T::zero()) {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    for c in curves {
        if c.len() != grid.count() {
            return Err(Error::param("curves", "every curve needs one value per grid site"));
        }
    }
    let range = grid.index_range(a, b)?;
    let lag = (delta / grid.mesh() + T::lit(1e-9)).floor();
    let lag = lag.to_usize().unwrap_or(usize::MAX);
    Ok(modulus_on_sites(curves, range, lag))
}
