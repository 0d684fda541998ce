use std::path::PathBuf;

use thiserror::Error;

use crate::types::TaskKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to load {}: {message}", path.display())]
    Load { path: PathBuf, message: String },

    #[error("dialogue {dialogue_id}: {message}")]
    Record { dialogue_id: String, message: String },

    #[error("dialogue {dialogue_id} lacks the gold annotations required for {task_kind}")]
    MissingGold {
        dialogue_id: String,
        task_kind: TaskKind,
    },

    #[error("{0} requires a non-empty input")]
    Empty(&'static str),

    #[error("label {0:?} is not in the label set")]
    UnknownLabel(String),

    #[error("record files cover different instances (only in baseline: {only_a:?}; only in candidate: {only_b:?})")]
    InstanceMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },

    #[error("provider failed after {attempts} attempt(s): {message}")]
    Provider {
        attempts: u32,
        status: Option<u16>,
        message: String,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn load(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn record(dialogue_id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Record {
            dialogue_id: dialogue_id.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) => 1,
            Error::Provider { .. } | Error::Protocol(_) => 3,
            _ => 2,
        }
    }
}
