//! Error type shared across the crate.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad configuration: unknown problem id, invalid parameter, malformed file.
    #[error("config error: {0}")]
    Config(String),

    /// Mismatched vector lengths or component index out of range.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A network's hidden parameters do not match the structured grid they
    /// are claimed to be built on.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The right-hand side left its domain of definition.
    #[error("rhs domain error at t = {t}: {detail}")]
    RhsDomain { t: f64, detail: String },

    /// Adaptive step control pushed the step below the resolvable minimum.
    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    /// The reference series of a relative error is identically zero.
    #[error("degenerate reference: sum of squares is zero")]
    DegenerateReference,

    /// Generic numerical failure (non-finite values, invalid series, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A training window failed; carries the window index.
    #[error("window {index} failed: {source}")]
    Window {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// A pipeline stage failed; carries the stage tag.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Stage { source, .. } | Error::Window { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
