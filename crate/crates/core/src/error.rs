use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZoptError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("correlation matrix B is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite objective value {value} at a point with norm {point_norm:e}")]
    NonFiniteValue { value: f64, point_norm: f64 },

    #[error("run diverged at iteration {iteration}: f = {value:e}, |x| = {point_norm:e}")]
    Diverged {
        iteration: usize,
        value: f64,
        point_norm: f64,
    },

    #[error("point is outside the feasible set (max violation {violation:e})")]
    Infeasible { violation: f64 },

    #[error("feasible set has infinite diameter")]
    UnboundedSet,

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("unknown solver `{0}`")]
    UnknownSolver(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ZoptError> = std::result::Result<T, E>;
