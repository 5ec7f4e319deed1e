use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {0} has non-positive measure")]
    NonPositiveMeasure(usize),
    #[error("edge ({0}, {1}) has non-positive length")]
    NonPositiveLength(usize, usize),
    #[error("space is disconnected: vertex {0} is unreachable from vertex 0")]
    Disconnected(usize),
    #[error("invalid vertex index {0}")]
    InvalidVertex(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("empty space: at least one vertex is required")]
    EmptySpace,
    #[error("dimension bound N = {0} must exceed 1")]
    BadDimensionBound(f64),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("grid dimension {0} is not supported (expected 1, 2 or 3)")]
    BadDimension(usize),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("singular point {0:?}: conformal factor diverges")]
    SingularPoint([f64; 3]),
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureFailed { tol: f64, estimate: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("radius window too small: {0}")]
    WindowTooSmall(String),
    #[error("bad exponent: p = {p} must satisfy 1 <= p < N = {n}")]
    BadExponent { p: f64, n: f64 },
    #[error("no valid kappa up to cap {0}")]
    NoValidKappa(f64),
    #[error("kappa too small: piece ({level}, {index}) misses the outer sphere and touches no lower piece")]
    KappaTooSmall { level: usize, index: usize },
    #[error("covering needs at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("graph has no boundary vertices")]
    NoBoundary,
    #[error("graph is disconnected")]
    GraphDisconnected,
    #[error("discrete Poincare ratio is unbounded: free vertex {0} is not linked to the boundary")]
    UnboundedPoincare(usize),
    #[error("empty set family")]
    EmptyFamily,
    #[error("exponent order: q = {q} < p = {p}")]
    BadOrder { p: f64, q: f64 },
    #[error("degenerate family: every gradient side vanishes")]
    DegenerateFamily,
    #[error("exponent p = {p} is not below the growth exponent eta = {eta}")]
    ExponentOutOfRange { p: f64, eta: f64 },
    #[error("weighted Nash inequality needs eta > 2 and N > 2 (eta = {eta}, N = {n})")]
    EtaTooSmall { eta: f64, n: f64 },
    #[error("test function {label} does not vanish on boundary piece {piece}")]
    SupportViolation { label: String, piece: usize },
    #[error("test function {label} is nonzero at vertex {vertex}, outside every enlarged piece")]
    OutsideCover { label: String, vertex: usize },
    #[error("linear solve did not converge: {iterations} iterations, residual {residual:e}")]
    NonConvergedSolve { iterations: usize, residual: f64 },
    #[error("time window unreliable: {0}")]
    WindowUnreliable(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
