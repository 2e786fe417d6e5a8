//! Error-to-exit-code plumbing and small shared helpers.

use std::path::Path;

pub enum CliError {
    /// Bad flags, unreadable/invalid inputs: exit 2.
    Usage(String),
    /// Numeric or runtime failure: exit 1.
    Runtime(String),
    /// A reproduction check reported FAIL (message already printed): exit 1.
    ChecksFailed,
}

pub type CliResult = Result<(), CliError>;

impl From<smr_core::Error> for CliError {
    fn from(e: smr_core::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

/// Default alpha_m = 1/sqrt(ln m) unless overridden.
pub fn resolve_alpha_m(m: usize, flag: Option<f64>) -> Result<f64, CliError> {
    match flag {
        Some(a) if a > 0.0 && a < 1.0 => Ok(a),
        Some(a) => Err(usage(format!("--alpha-m {a} is not in (0, 1)"))),
        None => smr_core::experiment::default_alpha_m(m).map_err(CliError::from),
    }
}
