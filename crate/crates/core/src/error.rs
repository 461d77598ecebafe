use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,

    #[error("signal is identically zero")]
    ZeroSignal,

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: f64, actual: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("adaptive filter diverged at sample {index}")]
    Divergence { index: u64 },

    #[error("unstable second-order section {index}: a1={a1}, a2={a2}")]
    UnstableSection { index: usize, a1: f64, a2: f64 },

    #[error("coefficient file: missing or malformed header: {0}")]
    CoeffHeader(String),

    #[error("coefficient file: parse error at line {line}: {detail}")]
    CoeffParse { line: usize, detail: String },

    #[error("manifest: parse error at line {line}: {detail}")]
    ManifestParse { line: usize, detail: String },

    #[error("manifest entry not found: {0}")]
    EntryNotFound(String),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("wav: {0}")]
    Wav(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(io) => Error::Io(io),
            other => Error::Wav(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
