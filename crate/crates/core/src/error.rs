use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("category {category} has {available} records, {shortfall} short of the {required} requested")]
    InsufficientRecords {
        category: String,
        available: usize,
        required: usize,
        shortfall: usize,
    },

    /// Input outside the domain of a numeric operation (empty sequences, zero norms, zero variance).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an operation's precondition (wrong mode, mismatched lengths, bad p-value).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// The backend could not be reached.
    #[error("transport error after {attempts} attempt(s) to {endpoint}: {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },

    /// The backend answered, but not in the agreed shape.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("unparseable reply after {attempts} attempt(s): {raw:?}")]
    Unparseable { attempts: u32, raw: String },

    #[error("missing report section: {0}")]
    MissingSection(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
