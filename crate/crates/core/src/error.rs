use std::path::PathBuf;

/// Errors produced while assembling, analysing or solving the two-level problems.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid method parameters: {0}")]
    Params(String),

    #[error("dense operator of size {rows}x{rows} exceeds the dense-size cap {cap}")]
    Size { rows: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coarse operator is singular: {0}")]
    SingularCoarse(String),

    #[error("frequency k={k} is a kernel frequency of the coarse symbol")]
    KernelFrequency { k: usize },

    #[error("frequency k={k} out of range for J={cells}")]
    FrequencyOutOfRange { k: usize, cells: usize },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("iteration diverged after {iterations} steps (last residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("nonlinear solve did not converge after {iterations} iterations (residual {residual:e}, last iterate alpha={alpha}, delta0={delta0}, c={c})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        alpha: f64,
        delta0: f64,
        c: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
