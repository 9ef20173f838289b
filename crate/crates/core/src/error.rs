use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("value {value} is not on the alpha/K grid (offset {offset:.3e})")]
    Quantization { value: f64, offset: f64 },

    #[error("promise violated: sum of values is {sum}, not a multiple of K = {k}")]
    Promise { sum: u64, k: u64 },

    #[error("result indeterminate: angle error bound {bound:.6} rad is not below a quarter rotation")]
    Indeterminate { bound: f64 },

    #[error("transitions are undecidable: final reach set for message {message} is not K-free")]
    Undecidable { message: usize },

    #[error("search budget exceeded: {needed} required, budget is {budget}")]
    Budget { needed: u128, budget: u128 },

    #[error("ring size 2K = {two_k} exceeds the 64-bit set representation")]
    UnsupportedSize { two_k: u64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
