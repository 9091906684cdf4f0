use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PPM: {0}")]
    PpmHeader(String),
    #[error("unsupported PPM: {0}")]
    PpmUnsupported(String),
    #[error("PPM pixel data truncated: expected {expected} bytes, found {found}")]
    PpmTruncated { expected: usize, found: usize },
    #[error("not an SCT1 tensor file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("tensor payload size mismatch: header declares {expected} bytes, found {found}")]
    PayloadSize { expected: usize, found: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Conv(#[from] segconv::ConvError),
    #[error("report: {0}")]
    Report(String),
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
