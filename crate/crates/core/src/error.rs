use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("potential evaluates to {value:e} < 0 at {point:?}; the potential spec is invalid")]
    NegativeValue { value: f64, point: Vec<f64> },

    #[error("spec violation: {0}")]
    SpecViolation(String),

    #[error("grid half-width T = {0} is below 1; the interpolating ramp on [-1, 1] is not resolved")]
    GridTooSmall(f64),

    #[error("curves live on different grids")]
    GridMismatch,

    #[error("curves have different limit wells")]
    WellMismatch,

    #[error("{stage} did not converge after {iterations} iterations (grad sup-norm {grad_sup:e})")]
    NonConvergence {
        stage: String,
        iterations: usize,
        grad_sup: f64,
    },

    #[error("no multistart seed converged for wells {from} -> {to}")]
    AllSeedsFailed { from: usize, to: usize },

    #[error("refined saddle drifted to a minimizing cluster (H1 distance {distance:e})")]
    DriftedToMinimizer { distance: f64 },

    #[error("inconsistent outcome: {0}")]
    Inconsistent(String),

    #[error("first coordinate never changes sign; curve is not a heteroclinic between reflected wells")]
    NoSignChange,

    #[error("curve is not equivariant under the reflection (first mismatch at node {node})")]
    NotSymmetric { node: usize },

    #[error("symmetric relaxation could not be classified: {0}")]
    Unclassified(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
