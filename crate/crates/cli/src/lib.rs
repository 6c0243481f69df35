//! Command-line front end: identity checks, single solves, threshold sweeps
//! and audits of the test-function argument.

// NaN must fail range checks, hence the negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use commands::{cmd_audit, cmd_solve, cmd_sweep, cmd_verify, run, Command};
pub use config::{Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_CONTRADICTION: i32 = 4;
pub const EXIT_AUDIT: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] katugampola::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn field(field: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("invalid `{field}`: {reason}"))
    }
}
