//! Single-site Metropolis dynamics for discrete Gibbs bridge ensembles, the
//! shared-randomness monotone coupling, and Monte Carlo normalizing constants.

mod chain;
mod coupled;
mod init;
mod normalizing;

pub use chain::{metropolis_log_ratio, resample_interior, run_chain, run_chain_with, ChainOutcome, ChainView};
pub use coupled::{monotone_coupled_run, search_ratio_violation, CouplingReport, RatioViolation};
pub use init::{initialize, lowest_trajectory};
pub use normalizing::{enumerate_bridge_ensembles, estimate_log_z, estimate_log_z_seeded, exact_log_z, LogZEstimate};

use serde::{Deserialize, Serialize};

use crate::ensemble::{ExternalHamiltonians, IncrementEnergy, LocalHamiltonian};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scan {
    /// Each proposal picks a (curve, site) pair uniformly at random.
    #[default]
    RandomSite,
    /// Each sweep visits curves and sites in order.
    Systematic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Proposal step: each move is `±delta`.
    pub delta: f64,
    /// Total sweeps, one sweep being (interior sites × curves) proposals.
    pub sweeps: usize,
    /// Leading sweeps excluded from observation.
    pub burn_in: usize,
    pub seed: u64,
    #[serde(default)]
    pub scan: Scan,
}

impl ChainConfig {
    pub fn new(delta: f64, sweeps: usize, burn_in: usize, seed: u64) -> Result<Self> {
        let c = Self {
            delta,
            sweeps,
            burn_in,
            seed,
            scan: Scan::RandomSite,
        };
        c.validate()?;
        Ok(c)
    }

    /// Burn-in of 20 × (interior sites × curves) sweeps followed by `sweeps` observed sweeps.
    pub fn with_default_burn_in(delta: f64, interior_sites: usize, curves: usize, sweeps: usize, seed: u64) -> Result<Self> {
        let burn_in = 20 * interior_sites * curves;
        Self::new(delta, burn_in + sweeps.max(1), burn_in, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::param("delta", format!("must be positive, got {}", self.delta)));
        }
        if self.sweeps == 0 || self.sweeps <= self.burn_in {
            return Err(Error::param(
                "sweeps",
                format!("need sweeps > burn_in, got {} and {}", self.sweeps, self.burn_in),
            ));
        }
        Ok(())
    }
}

/// What the chain samples: the interaction Hamiltonian, the increment energy
/// of the free walk, and optional external single-curve penalties.
#[derive(Clone, Copy)]
pub struct GibbsTarget<'a> {
    pub hamiltonian: &'a LocalHamiltonian<f64>,
    pub energy: &'a dyn IncrementEnergy,
    pub external: Option<&'a ExternalHamiltonians<f64>>,
}

impl<'a> GibbsTarget<'a> {
    pub fn new(hamiltonian: &'a LocalHamiltonian<f64>, energy: &'a dyn IncrementEnergy) -> Self {
        Self {
            hamiltonian,
            energy,
            external: None,
        }
    }

    pub fn with_external(mut self, external: &'a ExternalHamiltonians<f64>) -> Self {
        self.external = Some(external);
        self
    }
}
