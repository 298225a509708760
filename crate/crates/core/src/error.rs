use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node set is empty")]
    Empty,
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("weight v[{index}] = {value} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("nodes {first} and {second} coincide (distance {distance:e} <= {tol:e})")]
    DuplicateNode {
        first: usize,
        second: usize,
        distance: f64,
        tol: f64,
    },
    #[error("node {index} = {point} does not fit the {geometry} geometry")]
    GeometryViolation {
        index: usize,
        point: String,
        geometry: &'static str,
    },
    #[error("operation requires {expected} geometry")]
    GeometryMismatch { expected: &'static str },
    #[error("point coincides with node {index} (distance {distance:e})")]
    PointOnGamma { index: usize, distance: f64 },
    #[error("point {0} is not on the unit circle")]
    NotOnCircle(String),
    #[error("point {0} is outside the Herglotz domain")]
    OutOfDomain(String),
    #[error("level-set point {lambda} coincides with node {node}")]
    Overlap { lambda: usize, node: usize },
    #[error("shape mismatch: got {got}, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("partial-fraction identity residual {residual:e} exceeds {tol:e}")]
    DecompositionResidual { residual: f64, tol: f64 },
    #[error("degenerate quadruple: points {0} and {1} coincide")]
    DegenerateQuadruple(usize, usize),
    #[error("at least {needed} points are required, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("kernel basis not certified: deviation {deviation:e} exceeds {tol:e}")]
    BasisNotCertified { deviation: f64, tol: f64 },
    #[error("inner-function value equals 1")]
    AtOne,
    #[error("beta = 1 corresponds to alpha = infinity")]
    BetaEqualsOne,
    #[error("beta = {0} is not on the unit circle")]
    BetaNotUnimodular(String),
    #[error("kernel pair is singular: conj(zeta) * z = 1 off the diagonal")]
    SingularPair,
    #[error("circle quadrature did not converge: change {change:e} at {points} points")]
    QuadratureUnresolved { change: f64, points: usize },
    #[error("unknown demo '{0}'")]
    UnknownDemo(String),
    #[error("invalid input: {0}")]
    Input(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(e.to_string())
    }
}
