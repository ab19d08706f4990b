//! Discrete Gibbsian line ensembles: Boltzmann weights, exact random walk
//! bridges, Metropolis resampling with monotone coupling, the log-gamma
//! polymer line ensemble and its weak-noise scaling, and numerical checks of
//! the assumptions under which such ensembles are tight.
//!
//! The deterministic core ([`ensemble`] and [`special`]) is generic over the
//! floating point type; the stochastic layers work in `f64`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod ensemble;
pub mod error;
pub mod mcmc;
pub mod polymer;
pub mod quad;
pub mod scalar;
pub mod scaling;
pub mod seed;
pub mod special;
pub mod verify;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid64 = ensemble::Grid<f64>;
pub type Grid32 = ensemble::Grid<f32>;
pub type LineEnsemble64 = ensemble::LineEnsemble<f64>;
pub type LineEnsemble32 = ensemble::LineEnsemble<f32>;
pub type LocalHamiltonian64 = ensemble::LocalHamiltonian<f64>;
pub type RWHamiltonian64 = ensemble::RWHamiltonian<f64>;
