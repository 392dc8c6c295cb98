use thiserror::Error;

use crate::data::EffectIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// 1-based column index.
    #[error("column {0} has zero sample variance")]
    ZeroVarianceColumn(usize),

    #[error("response has zero sample variance")]
    ZeroVarianceResponse,

    #[error("vector has zero sample variance")]
    ZeroVariance,

    #[error("binary response must contain both classes and only 0/1 values")]
    DegenerateBinaryResponse,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid screening size: {0}")]
    InvalidGamma(String),

    #[error("invalid AR(1) correlation {0}; need 0 <= rho < 1")]
    InvalidRho(f64),

    #[error("effect {0} has a degenerate column")]
    DegenerateColumn(EffectIndex),

    #[error("coordinate descent did not converge within {0} sweeps")]
    MaxSweepsExceeded(usize),

    #[error("no point on the lambda path produced a usable fit")]
    PathFailed,

    #[error("every replicate failed")]
    AllReplicatesFailed,

    #[error("wrong response family: {0}")]
    WrongFamily(String),
}
