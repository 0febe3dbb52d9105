use crate::geometry::CameraId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point is not in front of the camera (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("viewing direction is undefined: point coincides with the optical center")]
    DegenerateDirection,

    #[error("rotation is not a proper orthonormal matrix: {0}")]
    InvalidRotation(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("limit-mode measurements have no finite covariance")]
    LimitModeHasNoCovariance,

    #[error("covariance is numerically singular (condition number {condition:e})")]
    SingularCovariance { condition: f64 },

    #[error("summed information is rank deficient (eigenvalue ratio {ratio:e})")]
    SingularInformation { ratio: f64 },

    #[error("noiseless and noisy cameras cannot be fused in one closed-form covariance")]
    MixedNoiselessCameras,

    #[error("ellipse section is degenerate (in-plane variance {variance:e} m^2)")]
    DegenerateSection { variance: f64 },

    #[error("all rays are parallel; the point cannot be triangulated")]
    DegenerateGeometry,

    #[error("at least two observations are required, got {0}")]
    InsufficientObservations(usize),

    #[error("{excluded} of {trials} Monte Carlo trials were degenerate (limit is 1%)")]
    TooFewValidTrials { excluded: usize, trials: usize },

    #[error("theoretical covariance has zero trace")]
    ZeroTheory,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown camera id {0}")]
    UnknownCamera(CameraId),

    #[error("no pair of visible cameras can reconstruct the point")]
    NoVisiblePair,

    #[error("need {needed} visible cameras, only {available} available")]
    NotEnoughCameras { needed: usize, available: usize },
}

impl Error {
    /// True for failures caused by the numbers (singular fusion, degenerate
    /// rays) rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularCovariance { .. }
                | Error::SingularInformation { .. }
                | Error::DegenerateSection { .. }
                | Error::DegenerateGeometry
                | Error::TooFewValidTrials { .. }
                | Error::ZeroTheory
                | Error::NoVisiblePair
        )
    }
}
