use thiserror::Error;

use crate::potentials::KktResiduals;
use crate::VertexFunction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph document: {0}")]
    Parse(String),

    #[error("vertex `{0}` is listed more than once")]
    DuplicateVertex(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("self-loop at vertex `{0}`")]
    SelfLoop(String),

    #[error("edge {{{0}, {1}}} is listed more than once")]
    DuplicateEdge(String, String),

    #[error("measure at `{id}` must be positive and finite, got {value}")]
    InvalidMeasure { id: String, value: f64 },

    #[error("killing at `{id}` must be nonnegative and finite, got {value}")]
    InvalidKilling { id: String, value: f64 },

    #[error("edge weight on {{{u}, {v}}} must be positive and finite, got {value}")]
    InvalidWeight { u: String, v: String, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function has length {got}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },

    #[error("exhaustion level {level} is not contained in level {}", level + 1)]
    NotNested { level: usize },

    #[error("`{0}` is not a normal contraction")]
    NotContraction(String),

    #[error("value at `{vertex}` is required but lies outside the defined region")]
    UndefinedValue { vertex: String },

    #[error("cutoff function takes value {value} at `{vertex}`, outside [0, 1]")]
    PhiOutOfRange { vertex: String, value: f64 },

    #[error("restricted form is not transient: component containing `{vertex}` has no killing and no edge leaving the set")]
    SingularRestriction { vertex: String },

    #[error("functional has negative coefficient {value} at `{vertex}`")]
    NonPositiveFunctional { vertex: String, value: f64 },

    #[error(
        "obstacle problem is not coercive: component containing `{vertex}` lies in the form kernel"
    )]
    NonCoercive { vertex: String },

    #[error("obstacle is positive at `{vertex}`, which lies outside the support set")]
    Infeasible { vertex: String },

    #[error("obstacle solver did not reach the KKT tolerance after {iterations} iterations ({residuals:?})")]
    MaxIterations {
        iterations: usize,
        residuals: KktResiduals,
        best: Box<VertexFunction>,
    },

    #[error("not a supersolution at `{vertex}`: L̃u = {value} < {required}")]
    NotSupersolution {
        vertex: String,
        value: f64,
        required: f64,
    },

    #[error("function is negative at `{vertex}` ({value})")]
    NegativeInput { vertex: String, value: f64 },

    #[error("forms are defined over different vertex sets")]
    MismatchedVertexSets,

    #[error("domain basis is linearly dependent (Gram determinant {0:e})")]
    DependentBasis(f64),

    #[error("monotone sequence decreased by {decrease:e} at `{vertex}` on level {level}")]
    NonMonotone {
        level: usize,
        vertex: String,
        decrease: f64,
    },

    #[error("root `{0}` is not in the first exhaustion level")]
    RootNotInFirstLevel(String),

    #[error("linear solver failed: {0}")]
    Solver(String),
}

impl Error {
    /// Failures of a numerical solve, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::SingularRestriction { .. }
                | Error::NonCoercive { .. }
                | Error::MaxIterations { .. }
                | Error::NonMonotone { .. }
                | Error::Solver(_)
        )
    }
}
