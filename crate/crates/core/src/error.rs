use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("face index {index} out of range (mesh has {count} faces)")]
    InvalidFace { index: usize, count: usize },

    #[error("face {0} is a boundary face and has no neighbor trace")]
    BoundaryFaceSide(usize),

    #[error("degenerate triangle {0} (zero or negative area)")]
    DegenerateTriangle(usize),

    #[error("quadrature degree {0} is not supported (expected 1..=10)")]
    UnsupportedQuadrature(usize),

    #[error("stress Jacobian is singular at the origin for p = {p} < 2 and delta = 0")]
    SingularStress { p: f64 },

    #[error("evaluation at the origin where the exact solution is singular")]
    SingularPoint,

    #[error("sparse factorization failed: {0}")]
    LinearSolve(String),

    #[error("Newton did not converge in {iterations} iterations (last residual {last_residual:e})")]
    NewtonDivergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("time step {step}: {source}")]
    TimeStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("time {t} outside of (0, {t_final}]")]
    TimeOutOfRange { t: f64, t_final: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
