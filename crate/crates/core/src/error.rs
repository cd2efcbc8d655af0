//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by model validation, planning, and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two anchor points are too close to define a direction between them.
    #[error("anchor points {i} and {j} coincide (separation {separation:.3e} m)")]
    CoincidentAnchors {
        i: usize,
        j: usize,
        separation: f64,
    },

    /// An operation that needs a cycle over the anchors was given fewer than 3 cables.
    #[error("operation requires at least 3 cables, got {0}")]
    TooFewCables(usize),

    /// A vector or basis has the wrong number of entries.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A cable force magnitude fell below the tension threshold.
    #[error("cable force magnitude {0:.3e} N is below the tension threshold; cable is slack")]
    SlackForce(f64),

    /// A planned trajectory drives a cable slack at a specific sample.
    #[error("cable {cable} goes slack at t = {t:.6} s (force magnitude {magnitude:.3e} N)")]
    SlackCable { cable: usize, t: f64, magnitude: f64 },

    /// Anchor geometry does not support the requested analysis.
    #[error("degenerate anchor geometry: {0}")]
    DegenerateGeometry(String),

    /// The simulation state left the sane range.
    #[error("simulation diverged at t = {t:.6} s")]
    Diverged { t: f64 },

    /// A model violates one of its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
