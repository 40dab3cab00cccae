use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("forms live over different coframes")]
    CoframeMismatch,
    #[error("metric undefined on label `{0}`")]
    MetricUndefined(String),
    #[error("geometry carries no hyperKähler triple")]
    MissingTriple,
    #[error("geometry carries no Kähler form `{0}`")]
    MissingKahler(String),
    #[error("not a Spin(7) form: eigenvalue-3 eigenspace has dimension {0}")]
    NotSpin7(usize),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("all polynomial coefficients vanish")]
    DegenerateAllZero,
    #[error("branch matching ambiguous near r = {0}")]
    BranchAmbiguity(f64),
    #[error("step size underflow at r = {0}")]
    StepFailure(f64),
    #[error("denominator vanished at r = {r} (p = {p})")]
    DenominatorVanished { r: f64, p: f64 },
    #[error("singular recurrence coefficient: {0}")]
    SingularCoefficient(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
