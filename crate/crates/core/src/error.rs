use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionError { expected: usize, found: usize },
    #[error("degenerate gap: {0}")]
    DegenerateGap(String),
    #[error("invalid neighborhood radius {0}; must be positive")]
    InvalidRadius(f64),
    #[error("incomplete input: missing {0}")]
    IncompleteInput(String),
    #[error("spike must be positive, found {0}")]
    NegativeSpike(f64),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("spike {lambda} is below the detection threshold {threshold}")]
    SubcriticalSpike { lambda: f64, threshold: f64 },
    #[error("inconsistent profile shape: {0}")]
    ShapeError(String),
    #[error("all poles inside the contour is not supported (T = s + 1)")]
    UnsupportedAllInside,
    #[error("no axis-aligned rectangle separates the inside poles from the outside poles")]
    NoSeparatingContour,
    #[error("quadrature did not converge after {0} panel doublings")]
    NonConvergent(usize),
    #[error("invalid variance profile: {0}")]
    ProfileError(String),
    #[error("invalid clique layout: {0}")]
    LayoutError(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {0})")]
    NotPsd(f64),
    #[error("matrix is singular")]
    SingularInput,
    #[error("empty result set")]
    EmptyResult,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("eigensolver failure: {0}")]
    Backend(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
