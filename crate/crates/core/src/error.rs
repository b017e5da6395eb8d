use thiserror::Error;

/// Errors surfaced by the engine. Input problems (malformed documents, data
/// out of the supported regimes) are distinguished from honest findings such
/// as verdict mismatches, which are not errors at all and live in the result
/// types instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema: {0}")]
    Schema(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("monoid is not sharp: {0}")]
    NotSharp(String),

    #[error("monoid is not simplicial: {0}")]
    NotSimplicial(String),

    #[error("extension is not Kummer: {0}")]
    NotKummer(String),

    #[error("weight class quotient is infinite")]
    InfiniteQuotient,

    #[error("colimit regime unsupported: {0}")]
    UnsupportedColimit(String),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("zero sheaf has no slope")]
    ZeroSlope,

    #[error("invalid sheaf: {0}")]
    InvalidSheaf(String),

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}
