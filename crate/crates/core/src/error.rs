use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },

    #[error("line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("unknown dialect {0:?}")]
    UnknownDialect(String),

    #[error("duplicate utterance id {0:?}")]
    DuplicateId(String),

    #[error("invalid split: {0}")]
    Split(String),

    #[error("audio: {0}")]
    Audio(String),

    #[error("zero-length audio")]
    ZeroLengthAudio,

    #[error("audio too short: {samples} samples, need at least {needed}")]
    AudioTooShort { samples: usize, needed: usize },

    #[error("fft size {0} is not a power of two")]
    FftSize(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("utterance {id}: {message}")]
    Utterance { id: String, message: String },

    #[error("audio required: this is a fusion bundle")]
    AudioRequired,

    #[error("not a model bundle")]
    NotABundle,

    #[error("unsupported bundle version {found}; supported versions: {supported:?}")]
    BundleVersion { found: u32, supported: Vec<u32> },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, error: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            error,
        }
    }

    /// Errors caused by bad user input (files, arguments) rather than a
    /// fault inside the toolkit.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NonFiniteGradient(_) | Error::Shape(_))
    }
}
