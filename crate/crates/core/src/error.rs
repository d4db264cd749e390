use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("axis {axis} out of range for a {dim}-dimensional chart")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("axis {axis} has {points} points but the order-{order} stencil needs {needed}")]
    GridTooSmall {
        axis: usize,
        points: usize,
        order: usize,
        needed: usize,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("non-finite value {value} at lattice index {index:?}")]
    NonFinite { index: Vec<usize>, value: f64 },
    #[error("degenerate metric: |det g| = {det:e} at {point:?}")]
    DegenerateMetric { det: f64, point: Vec<f64> },
    #[error("signature mismatch at {point:?}: declared {declared}, found {found}")]
    SignatureMismatch {
        declared: String,
        found: String,
        point: Vec<f64>,
    },
    #[error("point {point:?} lies outside the chart")]
    OutOfBounds { point: Vec<f64> },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("index signature mismatch: expected {expected}, found {found}")]
    IndexSignature { expected: String, found: String },
    #[error("field is not antisymmetric: max |F^ab + F^ba| = {max_symmetric:e}")]
    NotAntisymmetric { max_symmetric: f64 },
    #[error("singular Jacobian: det = {det:e} at {point:?}")]
    SingularJacobian { det: f64, point: Vec<f64> },
    #[error("chart map inconsistent: {0}")]
    ChartMap(String),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("no timelike direction: {0}")]
    NoTimelikeDirection(String),
    #[error("Killing residual {residual:e} exceeds cap {cap:e}")]
    KillingResidual { residual: f64, cap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
