use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("anisotropy vector has length {got}, expected {expected}")]
    AnisotropyLength { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("rotation block is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("elements belong to different groups")]
    GroupMismatch,
    #[error("frequency {0:?} lies outside the open orbit")]
    OutsideOrbit(Vec<f64>),
    #[error("frequency window is empty")]
    EmptyWindow,
    #[error("no bounding chart box: {0}")]
    ChartBox(String),
    #[error("sampling budget exhausted after {0} proposals")]
    BudgetExhausted(usize),
    #[error("integration region unbounded: {0}")]
    Unbounded(String),
    #[error("admissibility integral is numerically zero")]
    ZeroIntegral,
    #[error("aliasing: {0}")]
    Aliasing(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("unsupported object variant: {0}")]
    Variant(String),
    #[error("too few usable samples: {0}")]
    TooFewSamples(usize),
    #[error("empty grid")]
    EmptyGrid,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
