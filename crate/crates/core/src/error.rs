use std::fmt;

/// Errors raised anywhere in the fingerprint pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input with a location (file:line, sample id, ...).
    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    /// Input that parsed but violates a data invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Dataset validation failed; carries every error found.
    #[error("dataset validation failed with {} error(s):\n{}", .0.errors.len(), .0)]
    Validation(crate::ingest::ValidationReport),

    /// Binary artifact with wrong magic bytes or an unsupported version.
    #[error("artifact format: {0}")]
    Format(String),

    /// Eigensolver, IRLS or other numerical failure.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Bad flags or configuration.
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Failure inside a named pipeline stage.
    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Map,
    Codebook,
    Hist,
    Dist,
    Classify,
    Test,
    Embed,
    Manifest,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Validate => "validate",
            Stage::Map => "map",
            Stage::Codebook => "codebook",
            Stage::Hist => "hist",
            Stage::Dist => "dist",
            Stage::Classify => "classify",
            Stage::Test => "test",
            Stage::Embed => "embed",
            Stage::Manifest => "manifest",
        };
        f.write_str(name)
    }
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage, 2 data error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Numerical(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
