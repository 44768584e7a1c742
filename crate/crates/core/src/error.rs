use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {found}: {requirement}")]
    InvalidDimension { found: usize, requirement: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("vector is not unit norm (norm = {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("{name} = {value} outside its domain {domain}")]
    Domain { name: &'static str, value: f64, domain: &'static str },

    #[error("directions do not span R^{dim}: {detail}")]
    RankDeficient { dim: usize, detail: String },

    #[error("error polytope is unbounded along ray {ray:?}")]
    Unbounded { ray: Vec<f64> },

    #[error("vertex enumeration needs {systems} linear systems, above the cap of {cap}; use the radial net method")]
    Capacity { systems: f64, cap: u64 },

    #[error("fixed direction list has {available} entries, {needed} required")]
    FixedListTooShort { needed: usize, available: usize },

    #[error("internal error: {0}")]
    Internal(String),
}
