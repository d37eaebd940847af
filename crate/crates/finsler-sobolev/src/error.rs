use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} is outside the metric domain: {reason}")]
    OutsideDomain { point: Vec<f64>, reason: String },

    #[error("metric validity failure: {0}")]
    MetricValidity(String),

    #[error("unsupported order k={0}; only k in {{0, 1}} is implemented")]
    UnsupportedOrder(usize),

    #[error("non-finite integrand at nodes {0:?}")]
    NonFiniteSamples(Vec<Vec<f64>>),

    #[error("no closed-form distance for metric '{0}'")]
    NoClosedForm(String),

    #[error("distance target unreachable: {0}")]
    Unreachable(String),

    #[error("reversible metric required: {0}")]
    Irreversible(String),

    #[error("mollifier radius {eps} below grid support: spacing {spacing} must be < eps/4")]
    EpsilonBelowResolution { eps: f64, spacing: f64 },

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("cover does not reach sample point {0:?}")]
    NotCovering(Vec<f64>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
