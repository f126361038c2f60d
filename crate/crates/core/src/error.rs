use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The evaluation budget is spent. Optimizers treat this as normal termination.
    #[error("evaluation budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },

    #[error(
        "point lies outside the domain in coordinate {index}: {value} not in [{lower}, {upper}]"
    )]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample set is not poised: difference matrix has rank {rank} < {dim}")]
    NotPoised { rank: usize, dim: usize },

    #[error("replay buffer holds no usable pairs")]
    EmptyBuffer,

    #[error("guide direction has zero norm")]
    ZeroGradient,

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
