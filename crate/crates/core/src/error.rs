use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} has no Poisson bracket; use the dedicated effective vector field")]
    UnsupportedBracket(&'static str),

    #[error("non-finite gradient component at index {index}")]
    NonFiniteGradient { index: usize },

    #[error("non-finite value: {0}")]
    NonFiniteValue(String),

    #[error("radius {r:e} below guard r_min = {r_min:e}")]
    SingularRadius { r: f64, r_min: f64 },

    #[error("adaptive step underflow at t = {t:e} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("velocity map is not monotonic near p' = {at:e}")]
    NonMonotonicMap { at: f64 },

    #[error("no bracket found for velocity {v:e}")]
    BracketNotFound { v: f64 },

    #[error("mass must be positive, got {0:e}")]
    NonPositiveMass(f64),

    #[error("degenerate Eötvös denominator (a1 + a2 = 0)")]
    DegenerateDenominator,

    #[error("missing parameters: {0}")]
    MissingParams(String),

    #[error("series out of range: {0}")]
    SeriesOutOfRange(String),

    #[error("geometry violation: {0}")]
    GeometryViolation(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("incompatible specifications: {0}")]
    Incompatible(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidSpec(_) | Error::Incompatible(_) | Error::DimensionMismatch { .. } => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
