use std::fmt;
use std::path::PathBuf;

/// Pipeline stage an error surfaced in. Used by the harness to tag propagated errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Split,
    Features,
    Fit,
    Evaluate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Split => "split",
            Stage::Features => "features",
            Stage::Fit => "fit",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input outside the mathematical or physiological domain of an operation.
    #[error("domain error in `{field}`: {message}")]
    Domain { field: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data. `row` is 1-based over data rows (the header is row 0).
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("singular design (condition estimate {condition:e}); collinear columns: {columns:?}")]
    Singular { condition: f64, columns: Vec<String> },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Failure of one run within a seed sweep.
    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Domain {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap the error with the pipeline stage it came from.
    pub fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::Seed { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code for the CLI: 2 configuration, 3 data, 4 numerical, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) => 2,
            Error::Parse { .. } | Error::Domain { .. } => 3,
            Error::Singular { .. } | Error::Divergence { .. } => 4,
            Error::Io { .. } => 5,
            Error::Stage { .. } | Error::Seed { .. } => unreachable!("root() strips wrappers"),
        }
    }
}
