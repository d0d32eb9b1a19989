use std::io;
use std::path::PathBuf;

use fedpp_core::blobstore::BlobError;
use fedpp_core::chainsim::ContractError;
use fedpp_core::fltoy::FlError;
use fedpp_core::mechanism::MechanismError;
use fedpp_core::randbeacon::BeaconError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("transcript line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("audit failed at height {height}: {reason}")]
    AuditFailed { height: u64, reason: String },
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Beacon(#[from] BeaconError),
    #[error(transparent)]
    Blob(#[from] BlobError),
    #[error(transparent)]
    Fl(#[from] FlError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for audit or verification failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::AuditFailed { .. } | HarnessError::Parse { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
