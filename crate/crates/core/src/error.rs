use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("preference ordering is empty")]
    EmptyOrdering,

    #[error("invalid preference ordering `{0}`")]
    InvalidOrdering(String),

    #[error("restriction to an empty candidate set")]
    EmptyRestriction,

    #[error("candidate set {restrict} is not a subset of {of}")]
    NotASubset { restrict: String, of: String },

    #[error("profile has no voters")]
    EmptyProfile,

    #[error("ballots range over different candidate sets")]
    CandidateSetMismatch,

    #[error("observation list is empty")]
    EmptyObservations,

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("invalid utility function: {0}")]
    InvalidUtility(String),

    #[error("invalid rational `{0}`")]
    InvalidRational(String),

    #[error("invalid rule spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration needs {needed} items but the budget is {cap}")]
    BudgetExceeded { needed: u128, cap: u64 },
}
