//! Executable checks of the structural assumptions (A1–A4), the Gibbs
//! property, the normalizing-constant comparison and tightness statistics.

mod hamiltonians;
mod invariance;
mod kmt;
mod tightness;
mod zcompare;

pub use hamiltonians::{a3_lhs, check_a1, check_a2, check_a3, A3Trial, CurveFamily};
pub use invariance::{gibbs_invariance_test, polymer_hamiltonians, InvarianceConfig, InvarianceReport, SiteKs};
pub use kmt::{a4_walk, check_a4, coupled_sup_distances, A4Config, A4Report, A4Row, WalkFamily};
pub use tightness::{tightness_proxy, window_extrema, TightnessInput, TightnessReport, WindowExtrema};
pub use zcompare::{check_matching_boundaries, z_comparison_check, ZComparisonConfig, ZComparisonReport, ZRow};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// Outcome of one check. `pass` holds exactly when `worst_margin ≥ −tolerance`
/// and the check was conclusive.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub trials: u64,
    /// Signed distance to the asserted inequality; negative means violated.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Set when noise is too large to decide; such a check neither passes nor fails.
    pub inconclusive: bool,
    /// Where the threshold comes from, in words.
    pub threshold_source: String,
    pub details: Value,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, trials: u64, worst_margin: f64, tolerance: f64, threshold_source: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            seed: None,
            trials,
            worst_margin,
            tolerance,
            pass: worst_margin >= -tolerance,
            inconclusive: false,
            threshold_source: threshold_source.into(),
            details: Value::Null,
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).unwrap_or(Value::Null);
        self
    }

    pub fn mark_inconclusive(mut self) -> Self {
        self.inconclusive = true;
        self.pass = false;
        self
    }

    pub fn status(&self) -> &'static str {
        if self.inconclusive {
            "INCONCLUSIVE"
        } else if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// Human-readable rendering.
    pub fn render(&self) -> String {
        let mut s = format!(
            "[{}] {}: worst margin {:.6e} (tolerance {:.1e}), {} trials\n",
            self.status(),
            self.name,
            self.worst_margin,
            self.tolerance,
            self.trials
        );
        for (k, v) in &self.params {
            let _ = writeln!(s, "  {k} = {v}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "  seed = {seed}");
        }
        let _ = writeln!(s, "  threshold: {}", self.threshold_source);
        s
    }
}
