//! Trajectory-based nonadiabatic quantum dynamics engine.
//!
//! Implements the NAF (nonadiabatic field) method on constraint
//! coordinate-momentum phase space together with a family of baseline
//! trajectory methods (Ehrenfest, mean-field CPS, FSSH, FS-NAF, NAF(S),
//! GDTWA, NAF-GDTWA), the benchmark model suite they are usually run on,
//! estimators for electronic and nuclear observables, exact 1-D reference
//! propagators, and a deterministic ensemble harness.
//!
//! Everything works in Hartree atomic units internally; model builders
//! convert from eV / cm^-1 / fs at construction time.

pub mod adiabatic;
pub mod consts;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod reference;
pub mod sampling;

pub use error::NafError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, NafError>;
