//! Failure classification mapped onto process exit codes.
//!
//! A violated bound is not a `Failure`: the run completes, the report is
//! written with `ok = false`, and the process exits 1. The variants here
//! cover the runs that never reach a verdict.

use thiserror::Error;

/// Exit 2: the configuration is malformed. Exit 3: a solver or I/O step
/// failed before any verdict.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}
