use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {0} unsupported (need 3 <= n <= 7)")]
    Dimension(usize),

    #[error("point at |x| = {radius} lies inside the excised region")]
    DomainViolation { radius: f64 },

    #[error("graph provides derivatives up to order {available}, order {requested} requested")]
    DerivativeOrder { requested: usize, available: usize },

    #[error("induced metric is singular")]
    SingularMetric,

    #[error("level {h} is not a regular value (min |Df| = {min_gradient:e})")]
    CriticalValue { h: f64, min_gradient: f64 },

    #[error("radius {r} is below the horizon radius {horizon}")]
    BelowHorizon { r: f64, horizon: f64 },

    #[error("improper integral diverges for n = {0}")]
    Divergent(usize),

    #[error("mass profile violates sub-horizon bound at r = {r}: m = {m}, r^(n-2)/2 = {limit}")]
    SubHorizon { r: f64, m: f64, limit: f64 },

    #[error("mass profile samples not monotone at r = {r}")]
    NonMonotone { r: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("flux series did not converge within {steps} radius doublings")]
    NotConverged { steps: usize },

    #[error("truncation certificate unavailable: {0}")]
    Uncertified(String),

    #[error("level {h} is at or above the supremum {h_max} of the graph")]
    AboveSupremum { h: f64, h_max: f64 },

    #[error("{0}")]
    Range(String),

    #[error("outward-minimizing property not verified for level {h}")]
    OutwardMinimizingUnverified { h: f64 },

    #[error("ODE right side undefined: bracket {bracket} < 0")]
    OdeDomain { bracket: f64 },

    #[error("integration budget exhausted: {0}")]
    Budget(String),

    #[error("round level set recipe failed: epsilon = {epsilon}")]
    EpsilonNonPositive { epsilon: f64 },

    #[error("containment violated: {0}")]
    Containment(String),

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for failures caused by numerical non-convergence rather than bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::Uncertified(_) | Error::Budget(_)
        )
    }
}
