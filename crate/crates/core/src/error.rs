use thiserror::Error;

/// Errors produced by the tensor, linear-algebra and recovery routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("invalid shape {shape:?}: every extent must be at least 1 and the order at least 1")]
    InvalidShape { shape: Vec<usize> },

    #[error("data length {len} does not match shape {shape:?} (expected {expected})")]
    LengthMismatch {
        len: usize,
        expected: usize,
        shape: Vec<usize>,
    },

    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("singular Gram matrix: pivot {pivot:e} at row {row} is below tolerance (dictionary lacks full row rank)")]
    SingularGram { row: usize, pivot: f64 },

    #[error("matrix of {rows}x{cols} = {elements} elements exceeds the cap of {cap} elements")]
    CapExceeded {
        rows: u128,
        cols: u128,
        elements: u128,
        cap: usize,
    },

    #[error("column {column} is zero; coherence is undefined")]
    ZeroColumn { column: usize },

    #[error("coherence needs at least two columns, got {cols}")]
    TooFewColumns { cols: usize },

    #[error("spark enumeration over {cols} columns exceeds the cap of {cap}")]
    SparkCapExceeded { cols: usize, cap: usize },

    #[error(
        "dictionary {index} is {rows}x{cols}; dictionaries must have no more rows than columns"
    )]
    NotWide {
        index: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("reference signal is all zero; SNR is undefined")]
    ZeroSignal,

    #[error("sparsity {k} exceeds the {total} available entries")]
    SparsityTooLarge { k: usize, total: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
