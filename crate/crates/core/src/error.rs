use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral derivative of order {0} is not supported (orders 1..=3)")]
    UnsupportedOrder(usize),

    #[error("invalid soliton parameters: {0}")]
    InvalidParameter(String),

    #[error("v* is undefined for a single soliton (need K >= 2)")]
    UndefinedVStar,

    #[error("time integration became unstable at t = {time:.6e} (|u|_inf grew {factor:.2}x in one step)")]
    Instability { time: f64, factor: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("configuration failed validation:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn invalid_parameter(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
