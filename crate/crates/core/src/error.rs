use crate::linalg::LinalgError;
use crate::model::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid input: {0}")]
    Usage(&'static str),
    #[error("demixing matrix is singular at frequency bin {bin}")]
    SingularDemixing { bin: usize },
    #[error("demixing update failed at every frequency bin")]
    AllBinsSingular,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Recoverable per-bin conditions met while processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// Weighted covariance pencil was singular; the previous filter was kept.
    SingularPencil { bin: usize },
    /// Demixing matrix could not be inverted for projection back; the
    /// reference-channel unit vector was used instead.
    SingularDemixing { bin: usize },
    /// Observation had zero energy; the identity filter was used.
    ZeroCovariance { bin: usize },
    /// Fewer frames than channels; sample covariances are rank deficient.
    FewFrames { frames: usize, channels: usize },
}
