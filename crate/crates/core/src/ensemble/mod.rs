//! Grids, line ensembles, Hamiltonians and the Boltzmann weight algebra.

mod hamiltonian;
mod weight;

pub use hamiltonian::{
    ExternalHamiltonians, FnEnergy, HamiltonianKind, IncrementEnergy, LocalHamiltonian, RWHamiltonian, RwKind, Shift,
};
pub use weight::{
    boltzmann_log_weight, brownian_boltzmann_log_weight, modulus_of_continuity, modulus_on_sites,
    rectangle_neighborhood,
};

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Equally spaced time points `origin + i·mesh`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid<T = f64> {
    origin: T,
    mesh: T,
    count: usize,
}

impl<T: Scalar> Grid<T> {
    pub fn new(origin: T, mesh: T, count: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::param("origin", format!("must be finite, got {origin}")));
        }
        if !(mesh > T::zero()) || !mesh.is_finite() {
            return Err(Error::param("mesh", format!("must be positive and finite, got {mesh}")));
        }
        if count == 0 {
            return Err(Error::param("count", "grid needs at least one site"));
        }
        Ok(Self { origin, mesh, count })
    }

    pub fn origin(&self) -> T {
        self.origin
    }

    pub fn mesh(&self) -> T {
        self.mesh
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn site(&self, i: usize) -> T {
        self.origin + T::from_usize_exact(i) * self.mesh
    }

    pub fn end(&self) -> T {
        self.site(self.count - 1)
    }

    pub fn sites(&self) -> Vec<T> {
        (0..self.count).map(|i| self.site(i)).collect()
    }

    /// Number of interior sites (all but the two endpoints).
    pub fn interior_count(&self) -> usize {
        self.count.saturating_sub(2)
    }

    /// Site indices whose times fall in `[a, b]`, allowing a relative slack of
    /// 1e-9 mesh for endpoints that were computed in floating point.
    pub fn index_range(&self, a: T, b: T) -> Result<RangeInclusive<usize>> {
        let slack = T::lit(1e-9);
        let lo = ((a - self.origin) / self.mesh - slack).ceil().max(T::zero());
        let hi = ((b - self.origin) / self.mesh + slack).floor();
        let last = T::from_usize_exact(self.count - 1);
        let hi = hi.min(last);
        if !(lo <= hi) || a > b {
            return Err(Error::EmptyWindow(format!("[{a}, {b}] contains no grid site")));
        }
        let lo = lo.to_usize().unwrap_or(0);
        let hi = hi.to_usize().unwrap_or(0);
        Ok(lo..=hi)
    }

    /// Index of the site at time `t`, if `t` is a site up to 1e-9 mesh.
    pub fn index_of(&self, t: T) -> Option<usize> {
        let x = (t - self.origin) / self.mesh;
        let r = x.round();
        if (x - r).abs() > T::lit(1e-9) || r < T::zero() {
            return None;
        }
        let i = r.to_usize()?;
        (i < self.count).then_some(i)
    }

    /// The sub-grid on site indices `range`.
    pub fn restrict(&self, range: RangeInclusive<usize>) -> Result<Self> {
        let (lo, hi) = (*range.start(), *range.end());
        if lo > hi || hi >= self.count {
            return Err(Error::IndexOutOfRange {
                what: "grid site",
                index: hi as i64,
                valid: format!("0..={}", self.count - 1),
            });
        }
        Self::new(self.site(lo), self.mesh, hi - lo + 1)
    }
}

/// Upper or lower boundary row: either a constant (typically ±∞) or one value per site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Boundary<T = f64> {
    Constant(T),
    Values(Vec<T>),
}

impl<T: Scalar> Boundary<T> {
    pub fn plus_infinity() -> Self {
        Boundary::Constant(T::infinity())
    }

    pub fn minus_infinity() -> Self {
        Boundary::Constant(T::neg_infinity())
    }

    #[inline]
    pub fn at(&self, i: usize) -> T {
        match self {
            Boundary::Constant(c) => *c,
            Boundary::Values(v) => v[i],
        }
    }

    fn validate(&self, count: usize, which: &'static str) -> Result<()> {
        match self {
            Boundary::Constant(c) if c.is_nan() => Err(Error::param(which, "NaN boundary value")),
            Boundary::Constant(_) => Ok(()),
            Boundary::Values(v) if v.len() != count => Err(Error::param(
                which,
                format!("has {} entries for a grid of {count} sites", v.len()),
            )),
            Boundary::Values(v) if v.iter().any(|x| x.is_nan()) => Err(Error::param(which, "NaN boundary value")),
            Boundary::Values(_) => Ok(()),
        }
    }

    /// The boundary restricted to the site range (constants stay constant).
    pub fn restrict(&self, range: RangeInclusive<usize>) -> Self {
        match self {
            Boundary::Constant(c) => Boundary::Constant(*c),
            Boundary::Values(v) => Boundary::Values(v[range].to_vec()),
        }
    }
}

/// Curves `L_{k1}, ..., L_{k2}` on a common grid together with the boundary
/// rows `f` (row `k1 − 1`) and `g` (row `k2 + 1`).
///
/// Curve labels start at `first ≥ 1` so that the upper boundary row has a
/// valid label `first − 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineEnsemble<T = f64> {
    grid: Grid<T>,
    first: usize,
    curve_count: usize,
    values: Vec<T>,
    upper: Boundary<T>,
    lower: Boundary<T>,
}

impl<T: Scalar> LineEnsemble<T> {
    pub fn new(grid: Grid<T>, first: usize, curves: Vec<Vec<T>>, upper: Boundary<T>, lower: Boundary<T>) -> Result<Self> {
        if first == 0 {
            return Err(Error::param("first", "curve labels start at 1"));
        }
        if curves.is_empty() {
            return Err(Error::param("curves", "at least one curve is required"));
        }
        let count = grid.count();
        let curve_count = curves.len();
        let mut values = Vec::with_capacity(curve_count * count);
        for (j, c) in curves.into_iter().enumerate() {
            if c.len() != count {
                return Err(Error::param(
                    "curves",
                    format!("curve {} has {} values for a grid of {count} sites", first + j, c.len()),
                ));
            }
            if let Some(bad) = c.iter().position(|x| !x.is_finite()) {
                return Err(Error::param(
                    "curves",
                    format!("curve {} has non-finite value {} at site {bad}", first + j, c[bad]),
                ));
            }
            values.extend(c);
        }
        upper.validate(count, "upper_boundary")?;
        lower.validate(count, "lower_boundary")?;
        Ok(Self {
            grid,
            first,
            curve_count,
            values,
            upper,
            lower,
        })
    }

    /// Ensemble with `f ≡ +∞` and `g ≡ −∞`.
    pub fn unbounded(grid: Grid<T>, first: usize, curves: Vec<Vec<T>>) -> Result<Self> {
        Self::new(grid, first, curves, Boundary::plus_infinity(), Boundary::minus_infinity())
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Label `k1` of the top curve.
    pub fn first_index(&self) -> usize {
        self.first
    }

    /// Label `k2` of the bottom curve.
    pub fn last_index(&self) -> usize {
        self.first + self.curve_count - 1
    }

    pub fn curve_count(&self) -> usize {
        self.curve_count
    }

    pub fn upper(&self) -> &Boundary<T> {
        &self.upper
    }

    pub fn lower(&self) -> &Boundary<T> {
        &self.lower
    }

    fn slot(&self, k: usize) -> Result<usize> {
        if k < self.first || k > self.last_index() {
            return Err(Error::IndexOutOfRange {
                what: "curve",
                index: k as i64,
                valid: format!("{}..={}", self.first, self.last_index()),
            });
        }
        Ok(k - self.first)
    }

    pub fn curve(&self, k: usize) -> Result<&[T]> {
        let s = self.slot(k)?;
        let n = self.grid.count();
        Ok(&self.values[s * n..(s + 1) * n])
    }

    /// Curves in label order.
    pub fn curves(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.grid.count())
    }

    pub fn set(&mut self, k: usize, i: usize, v: T) -> Result<()> {
        let s = self.slot(k)?;
        let n = self.grid.count();
        if i >= n {
            return Err(Error::IndexOutOfRange {
                what: "site",
                index: i as i64,
                valid: format!("0..={}", n - 1),
            });
        }
        if !v.is_finite() {
            return Err(Error::param("value", format!("curve values must be finite, got {v}")));
        }
        self.values[s * n + i] = v;
        Ok(())
    }

    /// Value of row `k ∈ k1−1 ..= k2+1` at site `i`, with the boundary rows
    /// standing in for `k1 − 1` and `k2 + 1`.
    pub fn row_value(&self, k: usize, i: usize) -> Result<T> {
        let n = self.grid.count();
        if i >= n {
            return Err(Error::IndexOutOfRange {
                what: "site",
                index: i as i64,
                valid: format!("0..={}", n - 1),
            });
        }
        if k + 1 == self.first {
            Ok(self.upper.at(i))
        } else if k == self.last_index() + 1 {
            Ok(self.lower.at(i))
        } else {
            Ok(self.values[self.slot(k)? * n + i])
        }
    }

    /// All rows `k1−1 ..= k2+1` as a dense row-major matrix with the boundary
    /// rows expanded to one value per site.
    pub fn padded_rows(&self) -> Vec<T> {
        let n = self.grid.count();
        let mut out = Vec::with_capacity((self.curve_count + 2) * n);
        out.extend((0..n).map(|i| self.upper.at(i)));
        out.extend_from_slice(&self.values);
        out.extend((0..n).map(|i| self.lower.at(i)));
        out
    }

    /// Sub-ensemble on site range `sites` for curves `k1 ..= k2`; rows just
    /// outside the block become its boundaries.
    pub fn block(&self, k1: usize, k2: usize, sites: RangeInclusive<usize>) -> Result<Self> {
        self.slot(k1)?;
        self.slot(k2)?;
        if k1 > k2 {
            return Err(Error::param("curves", format!("empty curve block {k1}..={k2}")));
        }
        let grid = self.grid.restrict(sites.clone())?;
        let n = self.grid.count();
        let curves = (k1..=k2)
            .map(|k| {
                let s = k - self.first;
                self.values[s * n + sites.start()..=s * n + sites.end()].to_vec()
            })
            .collect();
        let row = |k: usize| -> Boundary<T> {
            Boundary::Values(sites.clone().map(|i| self.row_value(k, i).expect("row in range")).collect())
        };
        let upper = if k1 == self.first { self.upper.restrict(sites.clone()) } else { row(k1 - 1) };
        let lower = if k2 == self.last_index() { self.lower.restrict(sites.clone()) } else { row(k2 + 1) };
        Self::new(grid, k1, curves, upper, lower)
    }

    pub fn entrance(&self) -> Vec<T> {
        self.curves().map(|c| c[0]).collect()
    }

    pub fn exit(&self) -> Vec<T> {
        self.curves().map(|c| c[c.len() - 1]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sites_and_ranges() {
        let g = Grid::new(0.0, 0.05, 21).unwrap();
        assert_eq!(g.site(20), 1.0);
        assert_eq!(g.index_range(0.25, 0.5).unwrap(), 5..=10);
        assert_eq!(g.index_of(0.35), Some(7));
        assert_eq!(g.index_of(0.351), None);
        assert!(g.index_range(0.26, 0.29).is_err());
        assert!(Grid::new(0.0, 0.0, 3).is_err());
        assert!(Grid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn grid_is_generic_over_precision() {
        let g: Grid<f32> = Grid::new(1.0, 0.5, 5).unwrap();
        assert_eq!(g.end(), 3.0f32);
    }

    #[test]
    fn ensemble_rejects_bad_curves() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        assert!(LineEnsemble::unbounded(g, 1, vec![vec![0.0, f64::INFINITY, 1.0]]).is_err());
        assert!(LineEnsemble::unbounded(g, 1, vec![vec![0.0, 1.0]]).is_err());
        assert!(LineEnsemble::unbounded(g, 0, vec![vec![0.0, 1.0, 2.0]]).is_err());
        let l = LineEnsemble::new(
            g,
            1,
            vec![vec![0.0; 3]],
            Boundary::Values(vec![1.0, f64::INFINITY, 2.0]),
            Boundary::minus_infinity(),
        );
        assert!(l.is_ok());
    }

    #[test]
    fn block_takes_neighbouring_rows_as_boundaries() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let curves = vec![vec![3.0; 5], vec![2.0; 5], vec![1.0; 5]];
        let l = LineEnsemble::unbounded(g, 1, curves).unwrap();
        let b = l.block(2, 2, 1..=3).unwrap();
        assert_eq!(b.first_index(), 2);
        assert_eq!(b.upper(), &Boundary::Values(vec![3.0; 3]));
        assert_eq!(b.lower(), &Boundary::Values(vec![1.0; 3]));
        let top = l.block(1, 2, 0..=4).unwrap();
        assert_eq!(top.upper(), &Boundary::Constant(f64::INFINITY));
    }
}
