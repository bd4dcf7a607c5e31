use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Core(#[from] locbo::Error),

    #[error(transparent)]
    Rrm(#[from] locbo_rrm::RrmError),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("unknown {kind} '{name}'; known: {known}")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("{0} already holds results; pass --force to overwrite")]
    OutputExists(PathBuf),
}

pub type Result<T> = std::result::Result<T, ExpError>;

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| ExpError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
