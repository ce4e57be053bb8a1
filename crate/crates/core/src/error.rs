use thiserror::Error;

/// Errors raised by the library. Checks in the harness convert these into
/// failed results instead of propagating them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("empty set")]
    EmptySet,
    #[error("degenerate spec: {0}")]
    DegenerateSpec(String),
    #[error("cube is not a member of the decomposition")]
    NotInDecomposition,
    #[error("refine grid or raise epsilon: {0}")]
    Visibility(String),
    #[error("epsilon selection failed: {0}")]
    EpsilonSearch(String),
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("radius {t} below the grid floor {floor}")]
    RadiusTooSmall { t: f64, floor: f64 },
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
