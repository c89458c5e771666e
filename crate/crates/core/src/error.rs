use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid has {nodes} nodes, exceeding the cap of {cap}")]
    NodeCap { nodes: usize, cap: usize },
    #[error("potential value at node {index} is not finite")]
    NonFinitePotential { index: usize },
    #[error("unknown potential family `{0}`")]
    UnknownFamily(String),
    #[error("energy level {0} is positive; enable the positive-energy override to explore it")]
    PositiveEnergy(f64),
    #[error("sublevel set is empty")]
    EmptySublevel,
    #[error("interior component {component} ({size} nodes) has no boundary neighbour")]
    DetachedComponent { component: usize, size: usize },
    #[error("Dirichlet block is singular: pivot {pivot:e} at position {index}")]
    SingularDirichletBlock { index: usize, pivot: f64 },
    #[error("symmetric factorization broke down at position {index} (pivot {pivot:e})")]
    FactorizationBreakdown { index: usize, pivot: f64 },
    #[error("shift {shift} lies on the spectrum of `{object}`")]
    OnEigenvalue { shift: f64, object: &'static str },
    #[error("shift {lambda} is not in the resolvent set of the Dirichlet pencil")]
    ResolventViolation { lambda: f64 },
    #[error("dense path limited to order {cap}, got {order}")]
    SizeCap { order: usize, cap: usize },
    #[error("spectral summary carries no eigenvectors")]
    MissingVectors,
    #[error("dimension {n} is below the minimum {min}")]
    DimensionTooLow { n: usize, min: usize },
    #[error("critical exponent s = {s} must exceed 2")]
    SubcriticalExponent { s: f64 },
    #[error("constant `{0}` is not configured")]
    MissingConstant(&'static str),
    #[error("lattice enumeration radius² {radius_sq} exceeds the cap {cap}")]
    EnumerationCap { radius_sq: f64, cap: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
