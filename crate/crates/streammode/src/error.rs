use std::fmt;

use streammode_core::Error as CoreError;

/// What went wrong, at the granularity of the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Config,
    Data,
    Divergence,
    VerifyFailed,
    Output,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Config => 1,
            FailureKind::Data => 2,
            FailureKind::Divergence => 3,
            FailureKind::VerifyFailed => 4,
            FailureKind::Output => 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: FailureKind, message: impl fmt::Display) -> Self {
        Failure {
            kind,
            message: message.to_string(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Failure::new(FailureKind::Config, message)
    }

    pub fn data(message: impl fmt::Display) -> Self {
        Failure::new(FailureKind::Data, message)
    }

    pub fn output(message: impl fmt::Display) -> Self {
        Failure::new(FailureKind::Output, message)
    }

    /// Classify an estimator error raised while consuming samples.
    pub fn from_stream(context: impl fmt::Display, err: &CoreError) -> Self {
        let kind = match err {
            CoreError::Diverged { .. } => FailureKind::Divergence,
            CoreError::NonFiniteSample
            | CoreError::DimensionMismatch { .. }
            | CoreError::IncompleteWarmup { .. } => FailureKind::Data,
            _ => FailureKind::Config,
        };
        Failure::new(kind, format!("{context}: {err}"))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}
