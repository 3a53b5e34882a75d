use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MkcError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    Asymmetric { i: usize, j: usize, gap: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible missingness plan: {0}")]
    InfeasiblePlan(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("solver diverged at iteration {iteration}: objective = {value}")]
    Divergence { iteration: usize, value: f64 },

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("parse error in {}:{line}: {msg}", .path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("not enough neighbours: {0}")]
    NotEnoughNeighbours(String),

    #[error("truth row {row} has zero norm")]
    ZeroNormRow { row: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = MkcError> = std::result::Result<T, E>;
