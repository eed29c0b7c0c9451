//! File formats, configuration, synthetic test signals, and the command
//! implementations behind the `bnmf` binary.

pub mod commands;
pub mod config;
pub mod model_file;
pub mod synth;
pub mod wav;

use std::fmt;
use std::process::ExitCode;

/// Process-level error classification: argument errors exit 2, format
/// errors (files, rates, encodings) exit 3, numerical failures exit 4.
#[derive(Debug)]
pub enum CliError {
    Argument(String),
    Format(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Argument(_) => ExitCode::from(2),
            CliError::Format(_) => ExitCode::from(3),
            CliError::Numerical(_) => ExitCode::from(4),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Argument(msg) => write!(f, "argument error: {msg}"),
            CliError::Format(msg) => write!(f, "format error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Format(format!("I/O: {e}"))
    }
}

impl From<bnmf_core::signal::SignalError> for CliError {
    fn from(e: bnmf_core::signal::SignalError) -> Self {
        match e {
            bnmf_core::signal::SignalError::BadConfig(_) => CliError::Argument(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<bnmf_core::bnmf::BnmfError> for CliError {
    fn from(e: bnmf_core::bnmf::BnmfError) -> Self {
        use bnmf_core::bnmf::BnmfError;
        match e {
            BnmfError::NumericalFailure { .. } | BnmfError::UndefinedWeight => {
                CliError::Numerical(e.to_string())
            }
            BnmfError::InvalidParameter(_) | BnmfError::EmptyInput => {
                CliError::Argument(e.to_string())
            }
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<bnmf_core::hmm::HmmError> for CliError {
    fn from(e: bnmf_core::hmm::HmmError) -> Self {
        use bnmf_core::hmm::HmmError;
        match e {
            HmmError::AllStatesImpossible => CliError::Numerical(e.to_string()),
            HmmError::Bnmf(inner) => inner.into(),
            HmmError::ModelMismatch(_) | HmmError::InvalidDistribution => {
                CliError::Argument(e.to_string())
            }
            HmmError::RateMismatch { .. } => CliError::Format(e.to_string()),
            HmmError::Signal(inner) => inner.into(),
            HmmError::Online(inner) => CliError::Numerical(inner.to_string()),
            HmmError::DimensionMismatch => CliError::Format(e.to_string()),
        }
    }
}

impl From<bnmf_core::metrics::MetricsError> for CliError {
    fn from(e: bnmf_core::metrics::MetricsError) -> Self {
        use bnmf_core::metrics::MetricsError;
        match e {
            MetricsError::BadConfig(_) => CliError::Argument(e.to_string()),
            MetricsError::DegenerateReference | MetricsError::ZeroPower => {
                CliError::Numerical(e.to_string())
            }
            MetricsError::LengthMismatch => CliError::Format(e.to_string()),
        }
    }
}

impl From<bnmf_core::mlnmf::MlnmfError> for CliError {
    fn from(e: bnmf_core::mlnmf::MlnmfError) -> Self {
        CliError::Argument(e.to_string())
    }
}
