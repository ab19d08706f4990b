//! The log-gamma directed polymer: environments, path partition functions,
//! the z-array and the polymer line ensemble.

mod environment;
mod partition;
mod shape;

pub use environment::Environment;
pub use partition::{single_path_log_partition, tau_bruteforce, tau_log, PathTables, BRUTEFORCE_LIMIT};
pub use shape::{build_line_ensemble, z_array, PolymerLineEnsemble, TriangularArray};
