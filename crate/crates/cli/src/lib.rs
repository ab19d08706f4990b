//! Configuration, orchestration and persistence for `gibbs-lines` experiments.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod run;
pub mod table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("experiment error: {0}")]
    Core(#[from] gibbs_lines::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("plot error: {0}")]
    Plot(String),
}

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
}
