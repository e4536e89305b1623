use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] hbi_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error("index file was built for a different dataset")]
    HashMismatch,
    #[error("unsupported index format version {found} (this build reads {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
