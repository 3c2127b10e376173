use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {what} = {value} outside [{lo}, {hi}]")]
    Domain { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("|D| = {value:e} at t = {t} is below d_min = {d_min:e}")]
    DiffusionTooSmall { t: f64, value: f64, d_min: f64 },

    #[error("double factorial {0}!! overflows u64")]
    Overflow(u32),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("incompatible moment order: objective needs {needed}, vector has {got}")]
    IncompatibleOrder { needed: usize, got: usize },

    #[error("finite-difference failure: {0}")]
    FiniteDifference(String),

    #[error("unsupported variant for this solver: {0}")]
    UnsupportedVariant(String),

    #[error("cos-domain: kappa^2 * theta_0 = {value} must be < 1")]
    CosDomain { value: f64 },

    #[error("no bounded equilibrium variance: kappa^2 * theta_0 = {value} >= supremum {bound}")]
    UnboundedVariance { value: f64, bound: f64 },

    #[error("positivity violation: curvature K = {curvature} >= 0 at t = {t}, y = {y}")]
    PositivityViolation { t: f64, y: f64, curvature: f64 },

    #[error("ODE step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("bracket expansion failed: P(y) stays below {target}")]
    BracketFailure { target: f64 },

    #[error("epsilon range error: {0}")]
    EpsilonRange(String),

    #[error("sample domain error: {0}")]
    SampleDomain(String),

    #[error("resource error: {0}")]
    Resource(String),
}
