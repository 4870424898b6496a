//! Operational shell around the pre-grasp environment and trainer: run
//! configuration, checkpoints, metrics and traces.

pub mod checkpoint;
pub mod config;
pub mod gradient;
pub mod metrics;
pub mod run;
pub mod trace;

use std::path::Path;

use pregrasp::env::EnvError;
use pregrasp::sac::SacError;
use thiserror::Error;

pub use checkpoint::{load_checkpoint, load_checkpoint_as, save_checkpoint, CheckpointMeta, FORMAT_VERSION};
pub use config::{OutputConfig, RunConfig};
pub use metrics::{read_metrics, write_metrics, MetricsRow, MetricsWriter, METRICS_HEADER};
pub use run::{train_run, RunOutcome};
pub use trace::{read_trace, record_episode, write_trace, TraceRecord, TraceReward};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("corrupt checkpoint or data file: {0}")]
    Corrupt(String),
    #[error("checkpoint format version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u64, supported: u32 },
    #[error("tensor `{tensor}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("checkpoint was written under config digest {checkpoint}, current config has {config}")]
    DigestMismatch { checkpoint: String, config: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Sac(#[from] SacError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        Self::Csv(format!("{}: {e}", path.display()))
    }

    pub fn corrupt(message: impl Into<String>) -> Self {
        Self::Corrupt(message.into())
    }
}
