//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the numerical and physics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("{count} modes with |mu| <= tol; steady state is not unique")]
    DegenerateSteadyState { count: usize },

    #[error("no mode with |mu| <= tol; smallest |mu| = {smallest:e}")]
    NoSteadyState { smallest: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Wei-Norman matrix became singular at t = {t} (condition number {cond:e})")]
    XiSingular { t: f64, cond: f64 },

    #[error("closure dimension would exceed {max_dim}")]
    ClosureOverflow { max_dim: usize },

    #[error("operator is not in the span of the closure (residual {residual:e})")]
    OutsideAlgebra { residual: f64 },

    #[error("no bulk states left: m_max = {m_max}, edge margin = {margin}")]
    NoBulk { m_max: usize, margin: usize },

    #[error("time series has no channel named {0:?}")]
    MissingChannel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
