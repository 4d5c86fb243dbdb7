//! Error types for the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PomdpError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid action {action} for an environment with {num_actions} actions")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("step called on a finished or un-reset episode")]
    EpisodeOver,
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
}

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("goal unreachable from the agent position; the map generator is broken")]
    UnreachableGoal,
    #[error("calibration target {target} exceeds the base teacher's measured success {base}")]
    TargetAboveBase { target: f64, base: f64 },
    #[error("calibration did not converge to within {tolerance} of {target} (best miss {best_miss})")]
    CalibrationFailed {
        target: f64,
        tolerance: f64,
        best_miss: f64,
    },
    #[error(transparent)]
    Env(#[from] PomdpError),
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {what} encountered")]
    NonFinite { what: &'static str },
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    BadCheckpoint(String),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot sample from an empty replay buffer")]
    Empty,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
    #[error("training aborted: {0}")]
    Training(String),
    #[error(transparent)]
    Env(#[from] PomdpError),
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error(transparent)]
    Nn(#[from] NnError),
}
