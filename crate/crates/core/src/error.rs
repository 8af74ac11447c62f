use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("open-loop predictor unstable: rho(A) = {rho:.9} not below 1")]
    UnstableA { rho: f64 },

    #[error("output-feedback matrix unstable: rho(A + F*C) = {rho:.9} not below 1")]
    UnstableClosedLoop { rho: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank-{order} truncation degenerate: sigma_{order} = {sigma:.3e}")]
    OrderDeficient { order: usize, sigma: f64 },

    #[error(
        "run aborted at step {step}: signals diverged (|x| = {state_norm:.3e}, |y| = {output_norm:.3e})"
    )]
    Diverged {
        step: usize,
        state_norm: f64,
        output_norm: f64,
    },

    #[error("controller returned input of dimension {got}, expected {expected}, at step {step}")]
    BadControl {
        step: usize,
        got: usize,
        expected: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
