//! Error type shared by every stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DramnError {
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),
    #[error("snapshot matrix is identically zero")]
    ZeroMatrix,
    #[error("numerical failure in {context}: {detail}")]
    NumericalFailure { context: String, detail: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("insufficient history: need {needed} samples before t_end, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("labeling error: {0}")]
    Labeling(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("empty range: {0}")]
    EmptyRange(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed file {path}: {detail}")]
    Format { path: String, detail: String },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Broad failure class, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl DramnError {
    pub fn numerical(context: impl Into<String>, detail: impl Into<String>) -> Self {
        DramnError::NumericalFailure {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DramnError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn format(path: impl AsRef<std::path::Path>, detail: impl Into<String>) -> Self {
        DramnError::Format {
            path: path.as_ref().display().to_string(),
            detail: detail.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            DramnError::Config(_) | DramnError::Infeasible(_) => ErrorClass::Config,
            DramnError::NumericalFailure { .. } | DramnError::ZeroMatrix => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    /// Adds a prefix to the context of numerical failures; other variants pass through.
    pub fn within(self, outer: impl std::fmt::Display) -> Self {
        match self {
            DramnError::NumericalFailure { context, detail } => DramnError::NumericalFailure {
                context: format!("{outer}: {context}"),
                detail,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, DramnError>;
