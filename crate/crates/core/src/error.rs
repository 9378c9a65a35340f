use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("boundary point {0}: only the one-sided limit exists")]
    Boundary(f64),
    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("point {0} is not in the domain of any branch")]
    UndefinedPoint(f64),
    #[error("{y} has no preimage under branch {branch}")]
    NoPreimage { branch: usize, y: f64 },
    #[error("orbit broke at step {index}: {reason}")]
    OrbitBreak { index: usize, reason: String },
    #[error("backward orbit dead end at step {0}")]
    DeadEnd(usize),
    #[error("degenerate fiber: admissible radius fell below {0:e}")]
    DegenerateFiber(f64),
    #[error("annulus [{lo:e}, {hi:e}] crosses a branch boundary")]
    Geometry { lo: f64, hi: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("induced map has no branches up to depth {0}")]
    EmptyInducedMap(usize),
}
