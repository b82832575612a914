use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed timestamp {0}: negative or outside the representable range")]
    MalformedTimestamp(i64),

    #[error("cannot scan evidence root {path}: {source}")]
    Scan {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("registry config line {line}: {reason}")]
    Registry { line: usize, reason: String },

    #[error("prefs XML parse error at byte {offset}: {reason}")]
    PrefsParse { offset: u64, reason: String },

    #[error("cannot open database {path}: {reason}")]
    DbOpen { path: String, reason: String },

    #[error("cache parse error: {0}")]
    CacheParse(String),

    #[error("cannot read transaction log: {0}")]
    Ingest(#[source] std::io::Error),

    #[error("identity map line {line}: {reason}")]
    IdentityMap { line: usize, reason: String },

    #[error("forge error: {0}")]
    Forge(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Token(#[from] crate::token::TokenError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
