use thiserror::Error;

use crate::quadform::Definiteness;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector belongs to a different space (expected dimension {expected}, got {got})")]
    SpaceMismatch { expected: usize, got: usize },
    #[error("complex value used with a real space or real-only operation: {0}")]
    FieldMismatch(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("matrix is not Hermitian: {0}")]
    NonHermitian(String),
    #[error("M + N is not negative definite ({definiteness:?}, eigenvalues {eigenvalues:?})")]
    NotNegDef {
        definiteness: Definiteness,
        eigenvalues: [f64; 2],
    },
    #[error("form is not indefinite ({0:?}); factorization M = P*JP is refused")]
    NotIndefinite(Definiteness),
    #[error("form is negative definite; no nonnegative direction exists")]
    NegDefInput,
    #[error("input is outside the domain of the relation")]
    DomainViolation,
    #[error("relation returned {0} images; caller must select one")]
    AmbiguousImage(usize),
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error("Φ violates the M-constraint on a probe (value {value:e})")]
    PhiViolatesQc { value: f64, probe: usize },
    #[error("anchor (e, y) violates the M-constraint (value {0:e})")]
    AnchorViolatesM(f64),
    #[error("case assertion failed: {0}")]
    CaseAssertionFailed(String),
    #[error("worst-case construction check failed: {0}")]
    ConstructionCheckFailed(String),
    #[error("algebraic loop at time step {0}: no unique solution")]
    AlgebraicLoop(usize),
    #[error("inadmissible classical spec: {0}")]
    InadmissibleSpec(String),
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
