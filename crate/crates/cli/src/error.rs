use std::path::PathBuf;

use sot_core::SotError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Module(#[from] SotError),
}

impl CliError {
    /// 2 for anything wrong with the input, 1 when a computation could not
    /// produce a trustworthy answer.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } => 2,
            CliError::Module(e) => match e {
                SotError::NonProbability { .. }
                | SotError::EmptySupport
                | SotError::DimensionMismatch(_)
                | SotError::ZeroColumn(_)
                | SotError::NotOnUnitInterval { .. }
                | SotError::ZeroMass
                | SotError::BadRange(_)
                | SotError::InvalidInput(_) => 2,
                _ => 1,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Parse { .. } => "ParseError",
            CliError::Io { .. } => "IoError",
            CliError::Module(e) => match e {
                SotError::NonProbability { .. } => "NonProbability",
                SotError::EmptySupport => "EmptySupport",
                SotError::DimensionMismatch(_) => "DimensionMismatch",
                SotError::ZeroColumn(_) => "ZeroColumn",
                SotError::InternalInfeasible => "InternalInfeasible",
                SotError::BarycenterIdentityViolated { .. } => "BarycenterIdentityViolated",
                SotError::EnumerationCapExceeded(_) => "EnumerationCapExceeded",
                SotError::NoCandidate => "NoCandidate",
                SotError::NotOnUnitInterval { .. } => "NotOnUnitInterval",
                SotError::ZeroMass => "ZeroMass",
                SotError::BadRange(_) => "BadRange",
                SotError::ResolutionTooCoarse { .. } => "ResolutionTooCoarse",
                SotError::TooLarge(_) => "TooLarge",
                SotError::InvalidInput(_) => "InvalidInput",
                SotError::Lp(_) => "LpFailure",
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
