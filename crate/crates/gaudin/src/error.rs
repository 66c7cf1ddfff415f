//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaudinError {
    #[error("unsupported algebra label `{0}`")]
    UnsupportedAlgebra(String),
    #[error("singular invariant form")]
    SingularForm,
    #[error("{0} is not a positive root")]
    NotARoot(String),
    #[error("weight is not dominant integral: {0}")]
    NotDominant(String),
    #[error("site index {site} out of range (arity {arity})")]
    SiteOutOfRange { site: usize, arity: usize },
    #[error("marked points must be pairwise distinct")]
    CoincidentPoints,
    #[error("element is not regular: {0}")]
    NotRegular(String),
    #[error("weight-block mismatch between operators")]
    BlockMismatch,
    #[error("site arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("points too close to evaluate: {0}")]
    Collision(String),
    #[error("singularity order exceeded at {point}: pole order {found} > allowed {allowed}")]
    OrderExceeded { point: String, found: i64, allowed: i64 },
    #[error("spectral block of dimension {0} exceeds the cap of 512")]
    BlockTooLarge(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GaudinError>;
