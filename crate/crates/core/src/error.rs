use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("bad magic: expected \"GEVK\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("version mismatch: file has version {found}, reader supports {supported}")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("unsupported dtype code 0x{0:02x}")]
    UnsupportedDtype(u8),

    #[error("truncated header: {0}")]
    TruncatedHeader(&'static str),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("dims/rows inconsistent with file size: header implies {expected} payload bytes, file holds {found}")]
    SizeMismatch { expected: u64, found: u64 },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("fewer than 3 records ({0})")]
    TooFewRecords(usize),

    #[error("invalid split ratios {0:?}: must be non-negative and sum to 1")]
    InvalidRatios([f64; 3]),

    #[error("invalid image buffer: {0}")]
    InvalidImage(String),

    #[error("missing key: set UNSPLASH_ACCESS_KEY or pass an API key")]
    MissingApiKey,

    #[error("quota exceeded: {0}")]
    QuotaExceeded(String),

    #[error("HTTP error: {0}")]
    Http(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty series")]
    EmptySeries,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("q = {q} out of range (allowed 1..={max})")]
    ComponentsOutOfRange { q: usize, max: usize },

    #[error("q = {q} exceeds numerical rank {rank} of the covariance")]
    RankDeficient { q: usize, rank: usize },

    #[error("K = {k} exceeds the number of rows ({n})")]
    TooManyComponents { k: usize, n: usize },

    #[error("missing baseline (M0)")]
    MissingBaseline,

    #[error("no non-baseline variants to compare")]
    NoCandidates,

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("image id sets differ across variants: {0}")]
    MismatchedImageIds(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("missing header: expected `{0}`")]
    MissingHeader(String),

    #[error("empty file: {0}")]
    EmptyFile(PathBuf),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for faults that indicate a bug or numerical breakdown rather
    /// than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
