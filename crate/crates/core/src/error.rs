use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("symbol {symbol} at position {position} is outside an alphabet of size {alphabet_size}")]
    SymbolOutOfAlphabet {
        symbol: i64,
        position: usize,
        alphabet_size: usize,
    },

    #[error("input vector at step {step} has squared norm {norm_sq} > 1")]
    NormTooLarge { step: usize, norm_sq: f64 },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("segment {index} of a length-{len} stream is empty")]
    EmptySegment { index: usize, len: usize },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: weights have {weights}, input has {input}")]
    DimensionMismatch { weights: usize, input: usize },

    #[error("oracle size guard exceeded: {0}")]
    SizeGuard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
