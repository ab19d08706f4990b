use std::f64::consts::LN_2;

use serde::Serialize;

use crate::ensemble::{Grid, LineEnsemble};
use crate::error::{Error, Result};
use crate::polymer::{build_line_ensemble, Environment};

/// The scaled ensemble `L̄ᴺᵢ(t, x)` on the lattice `x ∈ (2/√N)ℤ`.
#[derive(Debug, Clone, Serialize)]
pub struct ScaledEnsemble {
    pub n: usize,
    pub t: f64,
    /// Polymer layer `Nt/8`.
    pub layer: usize,
    pub grid: Grid<f64>,
    /// Polymer column of the first grid site.
    pub column_first: usize,
    /// `values[i − 1][site]`, `None` outside the defined region.
    pub values: Vec<Vec<Option<f64>>>,
    /// Per-column slope `log 2 − log(√N − 1)` of the drift removed.
    pub drift: f64,
    /// Constant `log √N − log 2` added back.
    pub offset: f64,
}

impl ScaledEnsemble {
    pub fn curves(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, site: usize) -> Option<f64> {
        self.values.get(i.checked_sub(1)?)?.get(site).copied().flatten()
    }

    /// Whether curve `i` is defined at grid site `site`.
    pub fn is_defined(&self, i: usize, site: usize) -> bool {
        self.get(i, site).is_some()
    }

    /// Linear interpolation of curve `i` at `x`.
    pub fn interpolate(&self, i: usize, x: f64) -> Result<f64> {
        let g = &self.grid;
        let pos = (x - g.origin()) / g.mesh();
        if !(pos >= -1e-9 && pos <= (g.count() - 1) as f64 + 1e-9) {
            return Err(Error::OutsideDefinedRegion(format!("x = {x} is outside the grid")));
        }
        let lo = (pos.floor().max(0.0) as usize).min(g.count() - 1);
        let hi = (lo + 1).min(g.count() - 1);
        let frac = (pos - lo as f64).clamp(0.0, 1.0);
        let undefined = || Error::OutsideDefinedRegion(format!("curve {i} is undefined near x = {x}"));
        let a = self.get(i, lo).ok_or_else(undefined)?;
        if frac == 0.0 {
            return Ok(a);
        }
        let b = self.get(i, hi).ok_or_else(undefined)?;
        Ok(a + frac * (b - a))
    }

    /// As a line ensemble with curves `1..=curves` and infinite boundaries;
    /// fails if any value is undefined.
    pub fn to_line_ensemble(&self) -> Result<LineEnsemble> {
        let curves = self
            .values
            .iter()
            .enumerate()
            .map(|(c, row)| {
                row.iter()
                    .enumerate()
                    .map(|(s, v)| {
                        v.ok_or_else(|| {
                            Error::OutsideDefinedRegion(format!("curve {} undefined at site {s}", c + 1))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        LineEnsemble::unbounded(self.grid, 1, curves)
    }
}

/// Builds `L̄ᴺᵢ(t, x)` for `i ≤ curves` over the lattice sites of `[x_min, x_max]`.
///
/// `env` must have shape `√N`, at least `Nt/8` rows and enough columns for
/// `x_max`. Sites where curve 1 is undefined are rejected; deeper curves may
/// be undefined near the left edge.
pub fn scale_ensemble(env: &Environment, n: usize, t: f64, curves: usize, x_min: f64, x_max: f64) -> Result<ScaledEnsemble> {
    let s = super::check_n(n, 4)?;
    if (env.gamma() - s).abs() > 1e-12 * s {
        return Err(Error::Mismatch(format!("environment shape {} is not √N = {s}", env.gamma())));
    }
    let layer_f = n as f64 * t / 8.0;
    let layer = layer_f.round();
    if !(t > 0.0) || (layer_f - layer).abs() > 1e-9 || layer < 1.0 {
        return Err(Error::param("t", format!("Nt/8 = {layer_f} is not a positive integer")));
    }
    let layer = layer as usize;
    if curves == 0 || curves > layer {
        return Err(Error::param("curves", format!("need 1 ≤ curves ≤ Nt/8 = {layer}")));
    }
    if !(x_min <= x_max) {
        return Err(Error::param("x", format!("empty range [{x_min}, {x_max}]")));
    }
    // x = 2j/√N ↔ polymer column Nt/8 + j.
    let j_lo = (x_min * s / 2.0 - 1e-9).ceil() as i64;
    let j_hi = (x_max * s / 2.0 + 1e-9).floor() as i64;
    if j_lo > j_hi {
        return Err(Error::EmptyWindow(format!("no lattice site in [{x_min}, {x_max}]")));
    }
    if layer as i64 + j_lo < 1 {
        return Err(Error::OutsideDefinedRegion(format!(
            "x = {} maps to polymer column {} < 1",
            2.0 * j_lo as f64 / s,
            layer as i64 + j_lo
        )));
    }
    let col_first = (layer as i64 + j_lo) as usize;
    let col_last = (layer as i64 + j_hi) as usize;
    if col_last > env.n_max() || layer > env.k_max() {
        return Err(Error::param(
            "environment",
            format!("need at least {col_last} columns and {layer} rows, have {} × {}", env.n_max(), env.k_max()),
        ));
    }
    let raw = build_line_ensemble(env, layer, col_first, col_last, curves)?;
    let drift = LN_2 - (s - 1.0).ln();
    let offset = s.ln() - LN_2;
    let values = (1..=curves)
        .map(|i| {
            (col_first..=col_last)
                .map(|col| {
                    // Nt/4 + √N x/2 = 2·(Nt/8) + j = layer + col.
                    raw.get(i, col).map(|v| v - (layer + col) as f64 * drift + offset)
                })
                .collect()
        })
        .collect();
    Ok(ScaledEnsemble {
        n,
        t,
        layer,
        grid: Grid::new(2.0 * j_lo as f64 / s, 2.0 / s, col_last - col_first + 1)?,
        column_first: col_first,
        values,
        drift,
        offset,
    })
}
