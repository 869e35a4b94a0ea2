use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the admissible domain: {0}")]
    Domain(String),
    #[error("expression is not analytic at the point: {0}")]
    SingularExpr(String),
    #[error("metric is degenerate at the point: {0}")]
    DegenerateMetric(String),
    #[error("gradient of the potential vanishes (|grad f| = {0:e})")]
    ZeroGradient(f64),
    #[error("Q = {0:e} is below q_min")]
    QSingular(f64),
    #[error("denominator vanishes: {0}")]
    ZeroDenominator(&'static str),
    #[error("triple is degenerate: {0}")]
    DegenerateTriple(&'static str),
    #[error("excluded parameter: {0}")]
    ExcludedParameter(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("sampling domain is empty")]
    EmptyDomain,
    #[error("fiber curvature k = -X h^2 is not constant (relative spread {0:e})")]
    InconsistentK(f64),
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
