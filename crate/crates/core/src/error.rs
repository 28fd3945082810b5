use thiserror::Error;

/// Errors raised by grid construction, stencil evaluation, the banded
/// solvers, scheme assembly and the convergence harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sampling produced a non-finite value {value} at node ({i}, {j}) = ({x}, {y})")]
    Sampling {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("incompatible fields: {0}")]
    IncompatibleFields(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("boundary closure missing: {0}")]
    BoundaryClosure(String),

    #[error("singular matrix: pivot {pivot:e} at row {row} is below the breakdown threshold")]
    SingularMatrix { row: usize, pivot: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

impl Error {
    /// True for failures that come out of the numerics (breakdown, blow-up)
    /// rather than from invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SingularMatrix { .. } | Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
