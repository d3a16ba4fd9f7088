use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector is numerically zero")]
    ZeroVector,
    #[error("matrix is numerically zero")]
    ZeroMatrix,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("points do not span a line")]
    DegenerateSpan,
    #[error("invalid line: {0}")]
    InvalidLine(String),
    #[error("line lies outside the affine chart")]
    OutsideChart,
    #[error("camera matrix has numerical rank {rank}, expected 3")]
    RankDeficientCamera { rank: usize },
    #[error("line passes through the center of camera {camera}")]
    LineThroughCenter { camera: usize },
    #[error("plane is not back-projected by the camera (residual {residual:.3e})")]
    NotBackProjected { residual: f64 },
    #[error("cameras {first} and {second} share a center")]
    DuplicateCenters { first: usize, second: usize },
    #[error("need at least {min} cameras, got {got}")]
    TooFewCameras { min: usize, got: usize },
    #[error("index set {0:?} is not a collinear group of the rig")]
    NotCollinearGroup(Vec<usize>),
    #[error("quadric through the lines is not unique (solution space dimension {dimension})")]
    NonUniqueQuadric { dimension: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
