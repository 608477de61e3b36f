use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("inconsistent set {0}")]
    InconsistentSet(String),

    #[error("map is not a b-morphism: {0}")]
    NotBMorphism(String),

    #[error("partial injection is not injective: {0}")]
    NotInjective(String),

    #[error("coherence violation: {0}")]
    CoherenceViolation(String),

    #[error("pc-web condition ({condition}) failed: {witness}")]
    ConditionFailed { condition: u8, witness: String },

    #[error("EATS condition (*) violated: {0}")]
    StarViolated(String),

    #[error("term has free variables: {0}")]
    OpenTerm(String),

    #[error("index {index} out of range for index set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("ultraproduct of an empty family")]
    EmptyFamily,

    #[error("points live in different webs")]
    WebMismatch,

    #[error("padding indices are not strictly increasing")]
    IndicesNotIncreasing,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stage {stage} validation failed on {condition}: {witness}")]
    ValidationFailed { stage: usize, condition: String, witness: String },

    #[error("token needs stage {needed}, beyond the cap {cap}")]
    StageCapExceeded { needed: usize, cap: usize },

    #[error("transport violation: {0}")]
    TransportViolation(String),

    #[error("certificate failed: {0}")]
    CertificateFailed(String),

    #[error("structure too large: {0}")]
    TooLarge(String),
}
