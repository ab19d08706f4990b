//! Exact lattice random walk bridges, Brownian bridges and their quantile couplings.

mod brownian;
mod coupling;
mod law;
mod sampler;
mod tail;

pub use brownian::{brownian_sup_tail, sample_brownian_bridge};
pub use coupling::{open_uniform, quantile_couple_bridges, sup_distance, Node, QuantileCoupler};
pub use law::DiscreteIncrementLaw;
pub use sampler::BridgeSampler;
pub use tail::{bridge_sup_tail_check, TailRow};
