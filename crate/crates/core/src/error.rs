use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("response column `{column}`: {reason}")]
    Response { column: String, reason: String },

    #[error("no rows left after listwise deletion")]
    NoRows,

    #[error("column `{column}`: cannot parse `{value}` as a number")]
    Parse { column: String, value: String },

    #[error("column `{column}` has {found} distinct level(s); at least 2 are required")]
    TooFewCategories { column: String, found: usize },

    #[error("column `{column}`: {reason}")]
    InvalidSpec { column: String, reason: String },

    #[error("standardization is degenerate: weighted variance is zero")]
    DegenerateTransform,

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("cross-validation: {0}")]
    Folds(String),

    #[error("model artifact: {0}")]
    Artifact(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by a bad configuration rather than bad data or numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownColumn(_) | Error::InvalidSpec { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
