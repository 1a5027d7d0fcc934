use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed to parse or is out of range.
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// A physical or structural invariant does not hold.
    #[error("invariant `{invariant}` violated: {message}")]
    Invariant { invariant: String, message: String },

    /// The spatial domain cannot hold the requested states.
    #[error(
        "domain half-width {halfwidth:.4} w0 too small for the requested cutoff; try at least {suggested:.4} w0"
    )]
    DomainTooSmall { halfwidth: f64, suggested: f64 },

    /// Fewer bound states than the physics needs.
    #[error("only {found} bound state(s) below the cutoff; at least 2 are required")]
    TooFewBoundStates { found: usize },

    /// Two objects that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A numerical result drifted outside its validity envelope.
    #[error("numerical validity: {0}")]
    Numerical(String),

    #[error("malformed CSV {path}, row {row}: {message}")]
    Csv { path: PathBuf, row: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(invariant: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            invariant: invariant.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Invariant { .. }
                | Error::Json(_)
                | Error::DomainTooSmall { .. }
                | Error::TooFewBoundStates { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
