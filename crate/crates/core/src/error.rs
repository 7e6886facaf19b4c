use thiserror::Error;

/// Errors raised by path construction, kernels, simulation and the property checkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MrpError {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error(
        "incomplete path: interarrivals sum to {reached} which does not reach horizon {horizon}"
    )]
    IncompletePath { reached: f64, horizon: f64 },

    #[error("query {query} lies outside the path horizon {horizon}")]
    OutOfHorizon { query: f64, horizon: f64 },

    #[error("parameter {value} is outside the domain of the {family} family")]
    Parameter { family: &'static str, value: f64 },

    #[error("the {0} kernel has no density")]
    NoDensity(&'static str),

    #[error("regularity violation: {0}")]
    RegularityViolation(String),

    #[error("parameter {theta} falls in the excluded null set of the parameter map")]
    NullSet { theta: f64 },

    #[error("parameter map is not injective on the sampled support: {0}")]
    Injectivity(String),

    #[error("set B has estimated mixing mass {estimated} below the required {required}")]
    InsufficientMass { estimated: f64, required: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, MrpError>;
