use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid sampled function: {0}")]
    InvalidFunction(String),

    #[error("unknown family `{0}` (expected haar, daubechies, battle_lemarie or shannon)")]
    UnknownFamily(String),

    #[error("parameter {param} out of range for {family} (supported {range})")]
    ParamOutOfRange {
        family: &'static str,
        param: i64,
        range: &'static str,
    },

    #[error("filter is not orthonormal: {0}")]
    FilterNotOrthonormal(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invariant `{name}` failed: {detail}")]
    InvariantFailure { name: &'static str, detail: String },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("window [{0}, {1}] lies outside the tabulated support")]
    WindowOutsideSupport(f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schedule references absent coefficient {0}")]
    MissingCoefficient(String),

    #[error("schedule rejected: {0}")]
    ScheduleRejected(String),

    #[error("insufficient spectral resolution: {0}")]
    InsufficientResolution(String),

    #[error("criterion verdicts are not monotone in s: {0}")]
    NonMonotone(String),

    #[error("too few usable points: {0}")]
    TooFewPoints(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error stems from user input rather than from a failed
    /// computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::UnknownFamily(_)
                | Error::ParamOutOfRange { .. }
                | Error::InvalidArgument(_)
                | Error::WindowOutsideSupport(..)
                | Error::ScheduleRejected(_)
        )
    }
}
