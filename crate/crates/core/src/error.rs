use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("thresholds must lie in (0,1]: {0}")]
    InvalidThresholds(String),

    #[error("infeasible OR/MAF pair: {0}")]
    Infeasible(String),

    #[error("no informative strata")]
    NoInformativeStrata,

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("thresholds not derived for this design and threshold set")]
    ThresholdsNotDerived,

    #[error("replicates too large: {0}")]
    ReplicatesTooLarge(String),
}

impl Error {
    /// True when the error stems from the caller's input rather than from a
    /// numerical failure inside the engine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::SolverFailure(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
