use thiserror::Error;

use crate::group::GroupDescriptor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FoelnerError {
    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("generator index {index} out of range for rank {rank}")]
    GeneratorOutOfRange { index: u32, rank: u32 },

    #[error("descriptor mismatch: {left} vs {right}")]
    DescriptorMismatch {
        left: GroupDescriptor,
        right: GroupDescriptor,
    },

    #[error("operation requires a free group, got {0}")]
    NotFreeGroup(GroupDescriptor),

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("exhaustive search over {size} elements exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: usize, cap: usize },

    #[error("headroom violation: support radius {support} + operator radius {operator} > ambient radius {ambient}")]
    Headroom {
        support: usize,
        operator: usize,
        ambient: usize,
    },

    #[error("columns are linearly dependent at column {column}")]
    RankDeficient { column: usize },

    #[error("frame is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("operator is not a single unitary L_g")]
    NotUnitary,

    #[error("SVD did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix dimension {0} outside supported range")]
    BadDimension(usize),

    #[error("support radius {support} escapes realization radius {radius}")]
    RealizationRadius { support: usize, radius: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("certificate mismatch: evaluated {evaluated} vs formula {formula}")]
    CertificateMismatch { evaluated: f64, formula: f64 },
}

impl FoelnerError {
    /// Numerical failures are distinguished from precondition failures at the CLI boundary.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FoelnerError::NoConvergence { .. } | FoelnerError::CertificateMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FoelnerError>;
