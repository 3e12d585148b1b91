use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (len {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("degree {degree} unsupported (supported 0..={max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "element {element}: (q, u) pivot block is singular (sigma_min/sigma_max = {ratio:.3e}); \
         κ² may be a local resonance or the discrete setting degenerate, change κ or refine the mesh"
    )]
    SingularLocalBlock { element: usize, ratio: f64 },

    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    #[error("solver did not reach relative residual {tol:.1e} (best {residual:.3e})")]
    ConvergenceFailure { residual: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("problem '{0}' has no exact solution attached")]
    NoExactSolution(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
