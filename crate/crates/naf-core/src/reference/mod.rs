//! Numerically exact 1-D references: split-operator grid propagation of the
//! time-dependent Schroedinger equation, frozen-nuclei electronic
//! propagation, and the closed-form linear-crossing transition probability.

pub mod grid;
pub mod tdse;

pub use grid::{GridObservables, GridPropagator, GridWavefunction};
pub use tdse::{
    frozen_nuclei_tdse, landau_zener_probability, landau_zener_sweep, SweepScheme,
};
