//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NafError {
    /// Configuration rejected during validation (unknown keys, bad ranges,
    /// incompatible model/method combinations).
    #[error("config error: {0}")]
    Config(String),

    /// Two adiabatic surfaces closer than the degeneracy threshold; the
    /// Hellmann-Feynman coupling is not evaluated through near-zero gaps.
    #[error("degenerate adiabatic surfaces {lower} and {upper}: gap {gap:.3e} below threshold")]
    DegenerateFrame { lower: usize, upper: usize, gap: f64 },

    /// A single trajectory could not be completed (step-halving limit,
    /// non-finite state, degenerate frame mid-run).
    #[error("trajectory failed at t={time:.6}: {reason}")]
    Trajectory { time: f64, reason: String },

    /// Too many trajectories of an ensemble failed.
    #[error("ensemble aborted: {failed} of {total} trajectories failed ({first})")]
    EnsembleAborted { failed: usize, total: usize, first: String },

    /// Numerical precondition violated (wavefunction leaving the grid,
    /// non-finite intermediate, failed eigendecomposition).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl NafError {
    pub fn config(msg: impl Into<String>) -> Self {
        NafError::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        NafError::Numerical(msg.into())
    }
}
