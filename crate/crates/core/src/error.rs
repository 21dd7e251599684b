use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Q-point: {0}")]
    InvalidQPoint(String),

    #[error("mismatched Q-points: {0}")]
    Mismatch(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("point {index} is not in the projection neighborhood")]
    NotInNeighborhood { index: usize },

    #[error("degenerate: T is a single Q-fold point")]
    Degenerate,

    #[error("certificate failed: {0}")]
    CertificateFailed(String),

    #[error("region escapes the grid domain: {0}")]
    RegionOutsideDomain(String),

    #[error("test field support violation: {0}")]
    SupportViolation(String),

    #[error("zero local energy at the blow-up center (map is locally a Q-fold point)")]
    ZeroLocalEnergy,

    #[error("input is not homogeneous: {0}")]
    NonHomogeneous(String),

    #[error("no admissible radius: {0}")]
    NoAdmissibleRadius(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
