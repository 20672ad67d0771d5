use thiserror::Error;

use crate::spectral::SpectralPair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid edge ({i}, {j}) on {n} vertices")]
    InvalidEdge { i: usize, j: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigensolver did not converge after {iterations} operator applications (best residual {residual:.3e})")]
    EigenSolverFailure {
        iterations: usize,
        residual: f64,
        best: Vec<SpectralPair>,
    },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolverFailure {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("scores are not identifiable: graph has {} connected components", components.len())]
    NonIdentifiable { components: Vec<Vec<usize>> },

    #[error("no admissible edge left to augment")]
    Exhausted,

    #[error("size {n} exceeds the limit {limit} for {what}")]
    TooLarge {
        n: usize,
        limit: usize,
        what: &'static str,
    },

    #[error("vertex {0} has zero degree")]
    ZeroDegree(usize),

    #[error("vertex subset must be a nonempty proper subset")]
    InvalidSubset,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Domain errors (as opposed to malformed input) are the ones a caller
    /// can only fix by changing the data itself.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::NonIdentifiable { .. }
                | Error::DegenerateDataset(_)
                | Error::ZeroDegree(_)
                | Error::Exhausted
                | Error::EigenSolverFailure { .. }
                | Error::LinearSolverFailure { .. }
        )
    }
}
