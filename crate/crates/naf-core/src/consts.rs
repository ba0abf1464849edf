//! Unit conversions into Hartree atomic units.
//!
//! All dynamics runs in atomic units; these factors are applied once by the
//! model builders. Values are fixed here so every module converts identically.

/// 1 eV in hartree.
pub const EV: f64 = 1.0 / 27.211386245988;

/// 1 cm^-1 in hartree.
pub const CM1: f64 = 1.0 / 219474.6313632;

/// 1 femtosecond in atomic time units.
pub const FS: f64 = 41.341374575751;

/// Boltzmann constant in hartree per kelvin.
pub const KB: f64 = 3.166811563e-6;

/// Speed of light in atomic units (1/alpha).
pub const C_AU: f64 = 137.036;

/// Inverse temperature beta = 1/(KB*T) in atomic units for T in kelvin.
pub fn beta_from_kelvin(t_kelvin: f64) -> f64 {
    1.0 / (KB * t_kelvin)
}
