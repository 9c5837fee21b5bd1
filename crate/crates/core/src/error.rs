use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field size {p}^{m} exceeds 2^16")]
    FieldTooLarge { p: u32, m: u32 },
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("SVD did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("codebook is empty or too small: {0}")]
    EmptyCodebook(usize),
    #[error("{pairs} codeword pairs exceeds the exhaustive limit of {limit}")]
    TooManyPairs { pairs: u64, limit: u64 },
    #[error("codeword difference is identically zero (pair {0}, {1})")]
    ZeroDifference(usize, usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
