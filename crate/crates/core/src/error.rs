use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("operators live on different site systems")]
    SiteSystemMismatch,
    #[error("subgroup is not contained in the group")]
    SubgroupNotContained,
    #[error("lattice too small: {0}")]
    LatticeTooSmall(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("operator support violation: {0}")]
    SupportViolation(String),
    #[error("quotient classes do not commute: {0}")]
    NonCommutativeQuotient(String),
    #[error("no phase rescale makes the section exact: {0}")]
    PhaseIncoherence(String),
    #[error("no vacuum character found")]
    NoVacuum,
    #[error("several vacuum characters found: {0:?}")]
    MultipleVacua(Vec<usize>),
    #[error("fusion tensor is not group-like: {0}")]
    NonGroupLikeFusion(String),
    #[error("model is frustrated: {0}")]
    Frustrated(String),
    #[error("not a Clifford gate: {0}")]
    NonClifford(String),
    #[error("dense oracle cap exceeded: dimension {dim} > cap {cap}")]
    CapExceeded { dim: u128, cap: u128 },
    #[error("certificate missing or refused: {0}")]
    Certificate(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
