use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tongues::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("unknown config key `{0}` for this command")]
    UnknownKey(String),
    #[error("invalid value {value:?} for `{key}`: {msg}")]
    BadValue { key: String, value: String, msg: String },
    #[error("missing required value `{0}`")]
    Missing(String),
    #[error("empty grid: {0}")]
    EmptyGrid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}
