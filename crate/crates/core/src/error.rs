use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("validation error in layer {layer}: {message}")]
    LayerValidation { layer: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("maximum amplitude of the clean section is zero")]
    ZeroAmplitude,

    #[error("sample is noise-free; ratio undefined")]
    NoiseFree,

    #[error("trace {trace}: corrupted trace is identical to the clean trace")]
    UncorruptedTrace { trace: usize },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("empty sample set")]
    Empty,

    #[error("{path}: {source}")]
    FileIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Shape {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::FileIo {
            path: path.into(),
            source,
        }
    }
}
