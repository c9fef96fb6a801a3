use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} is outside its domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("{what} limited to size {cap}, got {got}{hint}")]
    SizeCap {
        what: &'static str,
        cap: usize,
        got: usize,
        hint: &'static str,
    },

    #[error("{what} did not converge within {iterations} iterations (matrix hash {hash:016x})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        hash: u64,
    },

    #[error("singular matrix (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("linear program failed: {0}")]
    Lp(#[from] crate::lp::LpError),

    #[error("bisection bracket invalid: {0}")]
    Bracket(String),

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("cutting-plane loop aborted at iteration {iteration} (objective trace so far: {trace:?}): {source}")]
    CutLoop {
        iteration: usize,
        trace: Vec<f64>,
        source: crate::lp::LpError,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
