use std::path::PathBuf;

use thiserror::Error;

/// Every failure the pipeline can report.
#[derive(Debug, Error)]
pub enum SldError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A row-oriented document (modal table, FRF CSV) failed to parse.
    #[error("parse error at row {row}, field `{field}`: {message}")]
    Parse {
        row: usize,
        field: String,
        message: String,
    },

    /// A structured document failed schema validation. `pointer` is a JSON pointer.
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no stable depth limit found: {0}")]
    EmptySld(String),

    #[error("{module}: {source}")]
    Context {
        module: &'static str,
        #[source]
        source: Box<SldError>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure category, used for CLI exit codes and HTTP status mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    NotFound,
    OutOfRange,
    Numeric,
    Io,
}

impl SldError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SldError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_module(self, module: &'static str) -> Self {
        match self {
            // keep the innermost tag only
            e @ SldError::Context { .. } => e,
            other => SldError::Context {
                module,
                source: Box::new(other),
            },
        }
    }

    /// Strips module context wrappers.
    pub fn root(&self) -> &SldError {
        match self {
            SldError::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn module(&self) -> Option<&'static str> {
        match self {
            SldError::Context { module, .. } => Some(module),
            _ => None,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self.root() {
            SldError::InvalidGeometry(_)
            | SldError::InvalidInput(_)
            | SldError::Parse { .. }
            | SldError::Schema { .. } => ErrorKind::Validation,
            SldError::NotFound(_) => ErrorKind::NotFound,
            SldError::OutOfRange(_) => ErrorKind::OutOfRange,
            SldError::Singular(_) | SldError::Numeric(_) | SldError::EmptySld(_) => {
                ErrorKind::Numeric
            }
            SldError::Io { .. } => ErrorKind::Io,
            SldError::Context { .. } => unreachable!("root() strips context"),
        }
    }

    /// JSON pointer for schema errors, if any.
    pub fn pointer(&self) -> Option<&str> {
        match self.root() {
            SldError::Schema { pointer, .. } => Some(pointer),
            _ => None,
        }
    }
}

pub type Result<T, E = SldError> = std::result::Result<T, E>;
