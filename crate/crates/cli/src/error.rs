//! Error type shared by the CLI workflows.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("invalid value at row {row}, column {column}: {reason}")]
    Validation {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("method {method} is not compatible with a {kind} scenario")]
    IncompatibleMethod { method: String, kind: String },
    #[error("unknown method name `{0}`")]
    UnknownMethod(String),
    #[error("placebo test needs at least {needed} pre-treatment points, got {got}")]
    InsufficientPreHistory { needed: usize, got: usize },
    #[error("placebo time {placebo} must lie at least {margin} points before t_c = {t_c}")]
    PlaceboTooLate {
        placebo: usize,
        t_c: usize,
        margin: usize,
    },
    #[error("method {0} reports no intervals; the placebo test needs them")]
    IntervalFreeMethod(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration error: {0}")]
    Config(#[from] datekit_core::config::ConfigError),
    #[error("panel error: {0}")]
    Panel(#[from] datekit_core::panel::PanelError),
    #[error("evaluation error: {0}")]
    Eval(#[from] datekit_core::eval::EvalError),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
