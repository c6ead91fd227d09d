use crate::optimize::GdTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("matrix is rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{what} ({total}) is not divisible by {divisor}")]
    Divisibility { what: &'static str, total: usize, divisor: usize },

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("infeasible coding parameters n={n}, k={k}, d={d}: {reason}")]
    InfeasibleParams { n: usize, k: usize, d: usize, reason: String },

    #[error("assignment mask error: {0}")]
    Mask(String),

    #[error("arity mismatch for {what}: expected {expected}, got {got}")]
    Arity { what: &'static str, expected: usize, got: usize },

    #[error("straggler model error: {0}")]
    StragglerModel(String),

    #[error("gradient descent diverged at iteration {iteration} (gradient norm {grad_norm:e})")]
    Divergence { iteration: usize, grad_norm: f64, trace: Box<GdTrace> },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("class {0} not present in dataset")]
    EmptyClass(u8),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
