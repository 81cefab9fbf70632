//! Error type shared by the library surface and the binary.

use thiserror::Error;

/// Everything the tool can fail with, bucketed by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration: malformed JSON, unknown keys, violated invariants,
    /// unusable parameter combinations. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// A numerical acceptance gate refused to run: oracle step/cutoff checks,
    /// failed quadrature. Exit code 3.
    #[error("numerical gate: {0}")]
    Gate(String),
    /// Filesystem trouble. Exit code 4.
    #[error("i/o error: {0}")]
    Io(String),
}

/// Process exit code for an error.
pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Config(_) => 2,
        CliError::Gate(_) => 3,
        CliError::Io(_) => 4,
    }
}

impl From<nemscat_core::params::ParamsError> for CliError {
    fn from(e: nemscat_core::params::ParamsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<nemscat_core::coherent::DynamicsError> for CliError {
    fn from(e: nemscat_core::coherent::DynamicsError) -> Self {
        match e {
            nemscat_core::coherent::DynamicsError::Ode(_) => CliError::Gate(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<nemscat_core::oracle::OracleError> for CliError {
    fn from(e: nemscat_core::oracle::OracleError) -> Self {
        use nemscat_core::oracle::OracleError;
        match e {
            OracleError::StepTooCoarse { .. }
            | OracleError::CutoffTooSmall { .. }
            | OracleError::Dynamics(_) => CliError::Gate(e.to_string()),
            OracleError::InvalidCutoff { .. } | OracleError::BadGrid { .. } => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
