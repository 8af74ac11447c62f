//! A desk-scale laboratory for finite-time system identification and adaptive
//! control of ARX (autoregressive exogenous) linear systems.
//!
//! The crate simulates ARX dynamics in predictor form, estimates Markov
//! parameters by regularized least squares with self-normalized confidence
//! sets, realizes state-space models from Hankel matrices, and runs two
//! adaptive-control loops: online gradient descent over disturbance feedback
//! controllers for strongly convex costs, and optimistic Riccati control for
//! quadratic costs. A seeded experiment harness measures regret empirically.

pub mod arx;
pub mod dfc;
pub mod error;
pub mod harness;
pub mod hokalman;
pub mod io;
pub mod linalg;
pub mod ofu;
pub mod sysid;

pub use error::{Error, Result};

/// How model estimates are refreshed during adaptive control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Estimate once after the warm-up and keep it for the rest of the run.
    ExploreCommit,
    /// Re-estimate at doubling epoch boundaries from all closed-loop data.
    ClosedLoop,
}

impl std::fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UpdateMode::ExploreCommit => write!(f, "explore_commit"),
            UpdateMode::ClosedLoop => write!(f, "closed_loop"),
        }
    }
}
