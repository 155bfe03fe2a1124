//! Shared error type for the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mechanical system: {0}")]
    InvalidSystem(String),

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("scene generation failed after {attempts} attempts: {reason}")]
    SceneGeneration { attempts: usize, reason: String },

    #[error("frequency band [{lo} Hz, {hi} Hz] violates {bound}")]
    BandViolation { lo: f64, hi: f64, bound: String },

    #[error("trace too short: {len} samples, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("bit sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("bit sequence has length {actual}, expected {expected}")]
    WrongLength { expected: usize, actual: usize },

    #[error("extremum at {frequency_hz} Hz is outside the grid band [{band_lo}, {band_hi}) Hz")]
    OutOfBand {
        frequency_hz: f64,
        band_lo: f64,
        band_hi: f64,
    },

    #[error("frequencies {a_hz} Hz and {b_hz} Hz fall in different segments")]
    DifferentSegments { a_hz: f64, b_hz: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{test} needs at least {min} bits, got {actual}")]
    InsufficientBits {
        test: String,
        min: usize,
        actual: usize,
    },

    #[error("metric input invalid: {0}")]
    MetricInput(String),

    #[error("invalid character '{found}' at position {position} in bit string")]
    BitParse { position: usize, found: char },

    #[error("protocol configuration invalid: {0}")]
    ProtocolConfig(String),

    #[error("malformed wire message: {0}")]
    WireFormat(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("study specification invalid: {0}")]
    StudySpec(String),

    #[error("empty report set: {0}")]
    EmptyReports(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
