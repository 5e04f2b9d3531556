use std::io;

/// Errors produced by the geometry, fitting, metric and I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid plane: {0}")]
    InvalidPlane(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("no valid depth at pixel ({u}, {v})")]
    NoDepth { u: usize, v: usize },
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds {
        u: usize,
        v: usize,
        width: usize,
        height: usize,
    },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by data that carries no usable signal
    /// (as opposed to malformed or inconsistent input).
    pub fn is_degenerate_data(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::InsufficientData(_))
    }

    pub(crate) fn format(what: &'static str, detail: impl ToString) -> Self {
        Error::Format {
            what,
            detail: detail.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
