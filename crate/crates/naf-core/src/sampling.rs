//! Initial-condition sampling: electronic phase-space variables on the
//! constraint sphere, discrete-kernel draws, surface-hopping amplitudes, and
//! nuclear Wigner distributions. All draws for one trajectory come from a
//! dedicated counter-mode RNG stream, so ensembles are reproducible for a
//! given master seed no matter how trajectories are batched across workers.
//!
//! Draw order within a trajectory is fixed and part of the contract:
//! nuclear coordinates (DOF order), nuclear momenta (DOF order), then the
//! electronic payload.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::models::NuclearInit;

/// RNG stream for one trajectory. The master seed fixes the ensemble; the
/// trajectory index selects an independent stream of the same generator.
pub fn trajectory_rng(seed: u64, trajectory_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory_index);
    rng
}

/// Default sphere parameter gamma(F) = (sqrt(F+1) - 1)/F.
pub fn gamma_default(f: usize) -> f64 {
    let ff = f as f64;
    ((ff + 1.0).sqrt() - 1.0) / ff
}

/// Electronic phase-space draw in the representation the occupation refers
/// to: complex variables g_n = x_n + i p_n on the sphere
/// sum_n (x_n^2 + p_n^2) = 2 (1 + F gamma), the diagonal commutator matrix
/// Gamma_nn = |g_n|^2/2 - delta_{n,jocc}, and the trajectory weight
/// w0 = F (|g_jocc|^2/2 - gamma).
#[derive(Debug, Clone)]
pub struct CpsSample {
    pub g: DVector<Complex64>,
    pub gamma_mat: DMatrix<Complex64>,
    pub w0: f64,
}

pub fn sample_cps(f: usize, gamma: f64, jocc: usize, rng: &mut impl Rng) -> CpsSample {
    let radius2 = 2.0 * (1.0 + f as f64 * gamma);
    let mut xy = vec![0.0f64; 2 * f];
    loop {
        let mut norm2 = 0.0;
        for v in xy.iter_mut() {
            *v = StandardNormal.sample(rng);
            norm2 += *v * *v;
        }
        if norm2 > 1e-300 {
            let s = (radius2 / norm2).sqrt();
            for v in xy.iter_mut() {
                *v *= s;
            }
            break;
        }
    }
    let g = DVector::from_fn(f, |n, _| Complex64::new(xy[2 * n], xy[2 * n + 1]));
    let gamma_mat = DMatrix::from_fn(f, f, |n, m| {
        if n == m {
            Complex64::new(g[n].norm_sqr() / 2.0 - if n == jocc { 1.0 } else { 0.0 }, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let w0 = crate::estimators::electronic_weight0(&g, jocc, gamma);
    CpsSample { g, gamma_mat, w0 }
}

/// Discrete kernel draw: Hermitian F x F matrix with K[jocc][jocc] = 1 and
/// K[jocc][n] = e^{i theta_n}/sqrt(2) for n != jocc, theta_n drawn uniformly
/// from {pi/4, 3pi/4, 5pi/4, 7pi/4}. Every other entry is zero. The same
/// matrix serves as the population estimator (unit weight).
pub fn sample_kernel(f: usize, jocc: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let mut k = DMatrix::zeros(f, f);
    k[(jocc, jocc)] = Complex64::new(1.0, 0.0);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for n in 0..f {
        if n == jocc {
            continue;
        }
        let quadrant: u8 = rng.random_range(0..4);
        let theta = std::f64::consts::FRAC_PI_4 * (1.0 + 2.0 * quadrant as f64);
        let z = Complex64::from_polar(inv_sqrt2, theta);
        k[(jocc, n)] = z;
        k[(n, jocc)] = z.conj();
    }
    k
}

/// Amplitude vector for hopping methods: a pure occupation state with a
/// uniform random global phase.
pub fn sample_amplitude(f: usize, jocc: usize, rng: &mut impl Rng) -> DVector<Complex64> {
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    DVector::from_fn(f, |n, _| {
        if n == jocc {
            Complex64::from_polar(1.0, theta)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Nuclear draw: (R, P). Gaussian draws take coordinates first, then
/// momenta; the `positive` flag redraws a coordinate until it lands above
/// zero (its momentum draw is unaffected).
pub fn sample_nuclear(init: &NuclearInit, rng: &mut impl Rng) -> (DVector<f64>, DVector<f64>) {
    match init {
        NuclearInit::Point { r0, p0 } => (r0.clone(), p0.clone()),
        NuclearInit::Gaussian { r0, p0, var_r, var_p, positive } => {
            let n = r0.len();
            let mut r = DVector::zeros(n);
            let mut p = DVector::zeros(n);
            for j in 0..n {
                let sd = var_r[j].sqrt();
                loop {
                    let z: f64 = StandardNormal.sample(rng);
                    r[j] = r0[j] + sd * z;
                    if !positive || r[j] > 0.0 {
                        break;
                    }
                }
            }
            for j in 0..n {
                let z: f64 = StandardNormal.sample(rng);
                p[j] = p0[j] + var_p[j].sqrt() * z;
            }
            (r, p)
        }
    }
}
