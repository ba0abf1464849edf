//! Harmonic-bath discretization and Wigner sampling widths.

use nalgebra::DVector;

use crate::{NafError, Result};

/// Discrete harmonic modes: frequencies strictly increasing and positive,
/// one coupling coefficient per mode.
#[derive(Debug, Clone)]
pub struct BathModes {
    pub omega: DVector<f64>,
    pub c: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    /// J(w) = (pi/2) alpha w exp(-w/omega_c)
    Ohmic { alpha: f64, omega_c: f64 },
    /// J(w) = 2 lambda omega_c w / (w^2 + omega_c^2)
    Debye { lambda: f64, omega_c: f64 },
}

/// Discretize a spectral density into `n_b` modes.
///
/// Ohmic: omega_j = -omega_c ln(1 - j/(1+N_b)), c_j = omega_j sqrt(alpha omega_c/(N_b+1)).
/// Debye: omega_j = omega_c tan(pi j/(2(N_b+1))), c_j = omega_j sqrt(2 lambda/(N_b+1)),
/// stored ascending in j (the index convention with tan(pi/2 - x) enumerates the same
/// frequencies in descending order; couplings depend only on omega so the relabeling
/// is immaterial).
pub fn discretize_spectral_density(sd: SpectralDensity, n_b: usize) -> Result<BathModes> {
    if n_b == 0 {
        return Err(NafError::config("bath discretization needs n_b >= 1"));
    }
    let nb1 = (n_b + 1) as f64;
    let (omega, c): (Vec<f64>, Vec<f64>) = match sd {
        SpectralDensity::Ohmic { alpha, omega_c } => {
            if alpha <= 0.0 || omega_c <= 0.0 {
                return Err(NafError::config("ohmic bath needs alpha > 0 and omega_c > 0"));
            }
            let amp = (alpha * omega_c / nb1).sqrt();
            (1..=n_b)
                .map(|j| {
                    let w = -omega_c * (1.0 - j as f64 / nb1).ln();
                    (w, w * amp)
                })
                .unzip()
        }
        SpectralDensity::Debye { lambda, omega_c } => {
            if lambda <= 0.0 || omega_c <= 0.0 {
                return Err(NafError::config("debye bath needs lambda > 0 and omega_c > 0"));
            }
            let amp = (2.0 * lambda / nb1).sqrt();
            (1..=n_b)
                .map(|j| {
                    let w = omega_c * (std::f64::consts::PI * j as f64 / (2.0 * nb1)).tan();
                    (w, w * amp)
                })
                .unzip()
        }
    };
    debug_assert!(omega.windows(2).all(|w| w[0] < w[1]));
    Ok(BathModes {
        omega: DVector::from_vec(omega),
        c: DVector::from_vec(c),
    })
}

/// Quantum correction factor Q(omega) = (beta omega/2) / tanh(beta omega/2).
/// Q -> 1 classically (beta omega -> 0), Q -> beta omega/2 in the ground state.
pub fn quantum_correction(beta: f64, omega: f64) -> f64 {
    let x = 0.5 * beta * omega;
    if x < 1e-8 {
        // tanh(x) ~ x - x^3/3: Q ~ 1 + x^2/3
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// Per-mode thermal Wigner variances (var_R, var_P) of a harmonic oscillator,
/// mass-weighted coordinates: var_R = Q/(beta omega^2), var_P = Q/beta.
/// `beta = None` is the vacuum (ground-state) limit var_R = 1/(2 omega), var_P = omega/2.
pub fn wigner_variances(beta: Option<f64>, omega: f64) -> (f64, f64) {
    match beta {
        Some(b) => {
            let q = quantum_correction(b, omega);
            (q / (b * omega * omega), q / b)
        }
        None => (0.5 / omega, 0.5 * omega),
    }
}
