//! Command-line front end: file formats, command dispatch and reporting.
//!
//! Exit codes: 0 when an answer was computed (whether yes or no), 2 for
//! input errors, 3 when a resource cap stopped the computation.

pub mod commands;
pub mod format;

use bfds::Caps;
use thiserror::Error;

pub use commands::run_command;

/// Environment variable overriding resource caps, e.g. `actions=4096,states=65536,dfs=1000`.
pub const CAPS_ENV: &str = "BFDS_CAPS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: String, source: format::FormatError },
    #[error("{0}")]
    Lib(#[from] bfds::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_resource() => EXIT_RESOURCE,
            _ => EXIT_INPUT,
        }
    }
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses a caps override; unnamed limits keep their defaults.
pub fn parse_caps(spec: &str) -> Result<Caps, CliError> {
    let mut caps = Caps::default();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{CAPS_ENV}: expected key=value, found {part:?}")))?;
        let bad = || CliError::Usage(format!("{CAPS_ENV}: bad value {value:?} for {key}"));
        let v: u128 = match value.trim().strip_prefix("2^") {
            Some(exp) => 1u128.checked_shl(exp.parse().map_err(|_| bad())?).ok_or_else(bad)?,
            None => value.trim().parse().map_err(|_| bad())?,
        };
        match key.trim() {
            "actions" => caps.actions = v,
            "states" => caps.states = v,
            "dfs" => caps.dfs_budget = u64::try_from(v).map_err(|_| bad())?,
            other => return Err(CliError::Usage(format!("{CAPS_ENV}: unknown cap {other:?}"))),
        }
    }
    Ok(caps)
}
