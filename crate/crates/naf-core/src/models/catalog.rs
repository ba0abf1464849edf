//! Builders for the benchmark model suite. Each builder converts published
//! parameters into atomic units, wires up the initial-condition descriptor,
//! and attaches the step-size / trajectory-count defaults the harness uses.

use nalgebra::{DMatrix, DVector};

use super::bath::{discretize_spectral_density, wigner_variances, SpectralDensity};
use super::{
    Analytic1D, GaussianCoupling, GridHint, InitialConditions, LinearCoupling, ModelDefinition,
    ModelKind, MorseSurface, NuclearInit, Representation, RunDefaults,
};
use crate::consts::{beta_from_kelvin, C_AU, CM1, EV, FS};
use crate::Result;

fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

/// Two-level system bilinearly coupled to an Ohmic bath, mass-weighted
/// coordinates. H_el = eps sigma_z + delta sigma_x + sigma_z sum_j c_j R_j.
#[derive(Debug, Clone, Copy)]
pub struct SpinBosonParams {
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub beta: f64,
    pub n_b: usize,
}

impl Default for SpinBosonParams {
    fn default() -> Self {
        SpinBosonParams { eps: 1.0, delta: 1.0, alpha: 0.1, omega_c: 1.0, beta: 5.0, n_b: 300 }
    }
}

pub fn spin_boson(p: SpinBosonParams) -> Result<ModelDefinition> {
    let bath = discretize_spectral_density(
        SpectralDensity::Ohmic { alpha: p.alpha, omega_c: p.omega_c },
        p.n_b,
    )?;
    let n = p.n_b;
    let h0 = DMatrix::from_row_slice(2, 2, &[p.eps, p.delta, p.delta, -p.eps]);
    let sigma_z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let omega2 = bath.omega.map(|w| w * w);
    let mut var_r = DVector::zeros(n);
    let mut var_p = DVector::zeros(n);
    for j in 0..n {
        let (vr, vp) = wigner_variances(Some(p.beta), bath.omega[j]);
        var_r[j] = vr;
        var_p[j] = vp;
    }
    Ok(ModelDefinition {
        label: format!("spin_boson(alpha={},omega_c={})", p.alpha, p.omega_c),
        f: 2,
        n,
        masses: ones(n),
        kind: ModelKind::LinearCoupling(LinearCoupling {
            omega2,
            h0,
            ops: vec![sigma_z],
            op_index: vec![0; n],
            b: bath.c,
        }),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation: 0,
            occupation_rep: Representation::Diabatic,
            nuclear: NuclearInit::Gaussian {
                r0: DVector::zeros(n),
                p0: DVector::zeros(n),
                var_r,
                var_p,
                positive: false,
            },
        },
        defaults: RunDefaults { dt: 0.01, n_traj: 100_000 },
        obs_scale_r: ones(n),
        obs_scale_p: ones(n),
        grid_hint: None,
    })
}

/// Seven-site exciton model with an independent Debye bath per site,
/// reorganization energy 35 cm^-1, characteristic frequency 106.14 cm^-1.
pub fn fmo7(n_b_per_site: usize, temperature_k: f64) -> Result<ModelDefinition> {
    #[rustfmt::skip]
    const H_CM: [f64; 49] = [
        12410.0,  -87.7,    5.5,   -5.9,    6.7,  -13.7,   -9.9,
          -87.7, 12530.0,  30.8,    8.2,    0.7,   11.8,    4.3,
            5.5,   30.8, 12210.0, -53.5,   -2.2,   -9.6,    6.0,
           -5.9,    8.2,  -53.5, 12320.0, -70.7,  -17.0,  -63.3,
            6.7,    0.7,   -2.2,  -70.7, 12480.0,  81.1,   -1.3,
          -13.7,   11.8,   -9.6,  -17.0,   81.1, 12630.0,  39.7,
           -9.9,    4.3,    6.0,  -63.3,   -1.3,   39.7, 12440.0,
    ];
    site_exciton_debye(
        "fmo7",
        DMatrix::from_row_slice(7, 7, &H_CM.map(|x| x * CM1)),
        35.0 * CM1,
        106.14 * CM1,
        n_b_per_site,
        beta_from_kelvin(temperature_k),
        0,
        RunDefaults { dt: 0.1 * FS, n_traj: 100_000 },
    )
}

/// Three-state singlet-fission site-exciton model (S1 / CT / TT) with a
/// Debye bath per state at 300 K.
pub fn singlet_fission(n_b_per_state: usize, temperature_k: f64) -> Result<ModelDefinition> {
    #[rustfmt::skip]
    const H_EV: [f64; 9] = [
         0.2,  -0.05,  0.0,
        -0.05,  0.3,  -0.05,
         0.0,  -0.05,  0.0,
    ];
    site_exciton_debye(
        "singlet_fission",
        DMatrix::from_row_slice(3, 3, &H_EV.map(|x| x * EV)),
        0.1 * EV,
        0.18 * EV,
        n_b_per_state,
        beta_from_kelvin(temperature_k),
        0,
        RunDefaults { dt: 0.001 * FS, n_traj: 24_000 },
    )
}

#[allow(clippy::too_many_arguments)]
fn site_exciton_debye(
    label: &str,
    h0: DMatrix<f64>,
    lambda: f64,
    omega_c: f64,
    n_b_per_site: usize,
    beta: f64,
    occupation: usize,
    defaults: RunDefaults,
) -> Result<ModelDefinition> {
    let f = h0.nrows();
    let bath = discretize_spectral_density(SpectralDensity::Debye { lambda, omega_c }, n_b_per_site)?;
    let n = f * n_b_per_site;
    let mut omega2 = DVector::zeros(n);
    let mut b = DVector::zeros(n);
    let mut op_index = vec![0usize; n];
    let mut var_r = DVector::zeros(n);
    let mut var_p = DVector::zeros(n);
    let mut ops = Vec::with_capacity(f);
    for site in 0..f {
        let mut proj = DMatrix::zeros(f, f);
        proj[(site, site)] = 1.0;
        ops.push(proj);
        for k in 0..n_b_per_site {
            let j = site * n_b_per_site + k;
            omega2[j] = bath.omega[k] * bath.omega[k];
            b[j] = bath.c[k];
            op_index[j] = site;
            let (vr, vp) = wigner_variances(Some(beta), bath.omega[k]);
            var_r[j] = vr;
            var_p[j] = vp;
        }
    }
    Ok(ModelDefinition {
        label: label.to_string(),
        f,
        n,
        masses: ones(n),
        kind: ModelKind::LinearCoupling(LinearCoupling { omega2, h0, ops, op_index, b }),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation,
            occupation_rep: Representation::Diabatic,
            nuclear: NuclearInit::Gaussian {
                r0: DVector::zeros(n),
                p0: DVector::zeros(n),
                var_r,
                var_p,
                positive: false,
            },
        },
        defaults,
        obs_scale_r: ones(n),
        obs_scale_p: ones(n),
        grid_hint: None,
    })
}

/// Atom coupled to the standing-wave modes of a 1-D cavity of length
/// L = 236200 a.u. with the atom at the midpoint. `levels` selects the
/// two- or three-state truncation of the atomic spectrum; the highest
/// retained level starts occupied and every field mode starts in vacuum.
/// Vacuum permittivity in atomic units: eps0 = 1/(4 pi).
pub fn cavity(levels: usize, n_modes: usize) -> Result<ModelDefinition> {
    if !(levels == 2 || levels == 3) {
        return Err(crate::NafError::config("cavity model supports 2 or 3 levels"));
    }
    const L: f64 = 236_200.0;
    const EPS: [f64; 3] = [-0.6738, -0.2798, -0.1547];
    const MU12: f64 = -1.034;
    const MU23: f64 = -2.536;
    let eps0 = 1.0 / (4.0 * std::f64::consts::PI);
    let r0_atom = 0.5 * L;

    let f = levels;
    let mut h0 = DMatrix::zeros(f, f);
    for k in 0..f {
        h0[(k, k)] = EPS[k];
    }
    let mut mu = DMatrix::zeros(f, f);
    mu[(0, 1)] = MU12;
    mu[(1, 0)] = MU12;
    if f == 3 {
        mu[(1, 2)] = MU23;
        mu[(2, 1)] = MU23;
    }

    let n = n_modes;
    let mut omega2 = DVector::zeros(n);
    let mut b = DVector::zeros(n);
    let mut var_r = DVector::zeros(n);
    let mut var_p = DVector::zeros(n);
    for j in 0..n {
        let jj = (j + 1) as f64;
        let omega = jj * std::f64::consts::PI * C_AU / L;
        let lam = (2.0 / (eps0 * L)).sqrt() * (jj * std::f64::consts::PI * r0_atom / L).sin();
        omega2[j] = omega * omega;
        b[j] = omega * lam;
        let (vr, vp) = wigner_variances(None, omega);
        var_r[j] = vr;
        var_p[j] = vp;
    }

    Ok(ModelDefinition {
        label: format!("cavity{}level", levels),
        f,
        n,
        masses: ones(n),
        kind: ModelKind::LinearCoupling(LinearCoupling {
            omega2,
            h0,
            ops: vec![mu],
            op_index: vec![0; n],
            b,
        }),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation: f - 1,
            occupation_rep: Representation::Diabatic,
            nuclear: NuclearInit::Gaussian {
                r0: DVector::zeros(n),
                p0: DVector::zeros(n),
                var_r,
                var_p,
                positive: false,
            },
        },
        defaults: RunDefaults { dt: 0.1, n_traj: 100_000 },
        obs_scale_r: ones(n),
        obs_scale_p: ones(n),
        grid_hint: None,
    })
}

fn scatter_1d(
    label: &str,
    kind: Analytic1D,
    mass: f64,
    r0: f64,
    p0: f64,
    alpha: f64,
    defaults: RunDefaults,
    grid: GridHint,
) -> ModelDefinition {
    let f = kind.f();
    ModelDefinition {
        label: label.to_string(),
        f,
        n: 1,
        masses: DVector::from_element(1, mass),
        kind: ModelKind::Analytic1D(kind),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation: 0,
            occupation_rep: Representation::Adiabatic,
            nuclear: NuclearInit::Gaussian {
                r0: DVector::from_element(1, r0),
                p0: DVector::from_element(1, p0),
                var_r: DVector::from_element(1, 0.5 / alpha),
                var_p: DVector::from_element(1, 0.5 * alpha),
                positive: false,
            },
        },
        defaults,
        obs_scale_r: ones(1),
        obs_scale_p: ones(1),
        grid_hint: Some(grid),
    }
}

/// Single avoided crossing, mass 2000, packet launched from R0 = -3.8 with
/// width alpha = 1 on the adiabatic ground state.
pub fn tully_sac(p0: f64) -> ModelDefinition {
    scatter_1d(
        "tully_sac",
        Analytic1D::TullySac { a: 0.01, b: 1.6, c: 0.005, d: 1.0 },
        2000.0,
        -3.8,
        p0,
        1.0,
        RunDefaults { dt: 0.01 * FS, n_traj: 100_000 },
        GridHint { r_min: -40.0, r_max: 40.0, n_points: 4096 },
    )
}

/// Dual avoided crossing, packet from R0 = -10.
pub fn tully_dac(p0: f64) -> ModelDefinition {
    scatter_1d(
        "tully_dac",
        Analytic1D::TullyDac { a: 0.1, b: 0.28, c: 0.015, d: 0.06, e0: 0.05 },
        2000.0,
        -10.0,
        p0,
        1.0,
        RunDefaults { dt: 0.01 * FS, n_traj: 100_000 },
        GridHint { r_min: -40.0, r_max: 40.0, n_points: 4096 },
    )
}

/// Extended coupling region, packet from R0 = -13.
pub fn tully_ecr(p0: f64) -> ModelDefinition {
    scatter_1d(
        "tully_ecr",
        Analytic1D::TullyEcr { b: 0.9, c: 0.1, e0: -0.0006 },
        2000.0,
        -13.0,
        p0,
        1.0,
        RunDefaults { dt: 0.01 * FS, n_traj: 100_000 },
        GridHint { r_min: -40.0, r_max: 40.0, n_points: 4096 },
    )
}

/// Asymmetric single avoided crossing, mass 1980, packet from R0 = -5 with
/// width alpha = 0.25.
pub fn asym_sac(p0: f64) -> ModelDefinition {
    scatter_1d(
        "asym_sac",
        Analytic1D::AsymSac { a1: 0.04, a2: 0.01, b: 1.0, c: 0.005, d: 1.0, q: 0.7 },
        1980.0,
        -5.0,
        p0,
        0.25,
        RunDefaults { dt: 0.01 * FS, n_traj: 100_000 },
        GridHint { r_min: -40.0, r_max: 40.0, n_points: 4096 },
    )
}

/// Three-state Morse/Gaussian photodissociation models (variants 1-3),
/// mass 20000, bond length positive-definite; the packet starts in the first
/// diabatic state in the ground vibrational Wigner distribution of frequency
/// 0.005 centered at the variant's R_e.
pub fn photodissociation(variant: usize) -> Result<ModelDefinition> {
    let (surfaces, couplings, r_e) = match variant {
        1 => (
            vec![
                MorseSurface { d: 0.003, beta: 0.65, r_eq: 5.0, c: 0.00 },
                MorseSurface { d: 0.004, beta: 0.60, r_eq: 4.0, c: 0.01 },
                MorseSurface { d: 0.003, beta: 0.65, r_eq: 6.0, c: 0.006 },
            ],
            vec![
                GaussianCoupling { i: 0, j: 1, a: 0.002, alpha: 16.0, r0: 3.40 },
                GaussianCoupling { i: 1, j: 2, a: 0.002, alpha: 16.0, r0: 4.80 },
            ],
            2.9,
        ),
        2 => (
            vec![
                MorseSurface { d: 0.020, beta: 0.65, r_eq: 4.5, c: 0.00 },
                MorseSurface { d: 0.010, beta: 0.40, r_eq: 4.0, c: 0.01 },
                MorseSurface { d: 0.003, beta: 0.65, r_eq: 4.4, c: 0.02 },
            ],
            vec![
                GaussianCoupling { i: 0, j: 1, a: 0.005, alpha: 32.0, r0: 3.66 },
                GaussianCoupling { i: 0, j: 2, a: 0.005, alpha: 32.0, r0: 3.34 },
            ],
            3.3,
        ),
        3 => (
            vec![
                MorseSurface { d: 0.020, beta: 0.40, r_eq: 4.0, c: 0.02 },
                MorseSurface { d: 0.020, beta: 0.65, r_eq: 4.5, c: 0.00 },
                MorseSurface { d: 0.003, beta: 0.65, r_eq: 6.0, c: 0.02 },
            ],
            vec![
                GaussianCoupling { i: 0, j: 1, a: 0.005, alpha: 32.0, r0: 3.40 },
                GaussianCoupling { i: 0, j: 2, a: 0.005, alpha: 32.0, r0: 4.97 },
            ],
            2.1,
        ),
        _ => return Err(crate::NafError::config("photodissociation variant must be 1, 2, or 3")),
    };
    let mass = 20_000.0;
    let omega = 0.005;
    Ok(ModelDefinition {
        label: format!("photodissociation_{}", variant),
        f: 3,
        n: 1,
        masses: DVector::from_element(1, mass),
        kind: ModelKind::Analytic1D(Analytic1D::MorseGaussian { surfaces, couplings }),
        hard_wall_eligible: true,
        init: InitialConditions {
            occupation: 0,
            occupation_rep: Representation::Diabatic,
            nuclear: NuclearInit::Gaussian {
                r0: DVector::from_element(1, r_e),
                p0: DVector::from_element(1, 0.0),
                var_r: DVector::from_element(1, 0.5 / (mass * omega)),
                var_p: DVector::from_element(1, 0.5 * mass * omega),
                positive: true,
            },
        },
        defaults: RunDefaults { dt: 0.01 * FS, n_traj: 100_000 },
        obs_scale_r: ones(1),
        obs_scale_p: ones(1),
        grid_hint: Some(GridHint { r_min: 0.5, r_max: 30.0, n_points: 8192 }),
    })
}

/// Linear vibronic coupling model in canonical mass-weighted coordinates.
/// Published parameters are dimensionless (R_bar = sqrt(omega) R), so the
/// per-mode coupling matrix enters with an extra sqrt(omega) and observable
/// scale factors map back to the dimensionless frame.
struct LvcmSpec {
    label: &'static str,
    /// eV
    omega: Vec<f64>,
    /// eV
    e_n: Vec<f64>,
    /// kappa[k][n] (eV); diagonal linear coupling of mode k on state n
    kappa: Vec<Vec<f64>>,
    /// (mode k, state n, state m, value eV)
    lambda: Vec<(usize, usize, usize, f64)>,
    occupation: usize,
    /// dimensionless Wigner centers and variances per mode
    rbar0: Vec<f64>,
    var_rbar: Vec<f64>,
    var_pbar: Vec<f64>,
}

fn lvcm(spec: LvcmSpec) -> ModelDefinition {
    let n = spec.omega.len();
    let f = spec.e_n.len();
    let omega_au: Vec<f64> = spec.omega.iter().map(|w| w * EV).collect();
    let mut h0 = DMatrix::zeros(f, f);
    for k in 0..f {
        h0[(k, k)] = spec.e_n[k] * EV;
    }
    let mut ops = Vec::with_capacity(n);
    for k in 0..n {
        let mut s = DMatrix::zeros(f, f);
        for nn in 0..f {
            s[(nn, nn)] = spec.kappa[k][nn] * EV;
        }
        ops.push(s);
    }
    for &(k, nn, mm, val) in &spec.lambda {
        ops[k][(nn, mm)] = val * EV;
        ops[k][(mm, nn)] = val * EV;
    }
    let omega2 = DVector::from_fn(n, |k, _| omega_au[k] * omega_au[k]);
    let b = DVector::from_fn(n, |k, _| omega_au[k].sqrt());
    // canonical from dimensionless: R = R_bar/sqrt(omega), P = sqrt(omega) P_bar
    let r0 = DVector::from_fn(n, |k, _| spec.rbar0[k] / omega_au[k].sqrt());
    let var_r = DVector::from_fn(n, |k, _| spec.var_rbar[k] / omega_au[k]);
    let var_p = DVector::from_fn(n, |k, _| spec.var_pbar[k] * omega_au[k]);
    let scale_r = DVector::from_fn(n, |k, _| omega_au[k].sqrt());
    let scale_p = DVector::from_fn(n, |k, _| 1.0 / omega_au[k].sqrt());
    ModelDefinition {
        label: spec.label.to_string(),
        f,
        n,
        masses: ones(n),
        kind: ModelKind::LinearCoupling(LinearCoupling {
            omega2,
            h0,
            ops,
            op_index: (0..n).collect(),
            b,
        }),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation: spec.occupation,
            occupation_rep: Representation::Diabatic,
            nuclear: NuclearInit::Gaussian {
                r0,
                p0: DVector::zeros(n),
                var_r,
                var_p,
                positive: false,
            },
        },
        defaults: RunDefaults { dt: 0.01 * FS, n_traj: 100_000 },
        obs_scale_r: scale_r,
        obs_scale_p: scale_p,
        grid_hint: None,
    }
}

/// 3-mode, 2-state pyrazine model; the second diabatic state starts occupied.
pub fn lvcm_pyrazine3() -> ModelDefinition {
    lvcm(LvcmSpec {
        label: "lvcm_pyrazine3",
        omega: vec![0.126, 0.074, 0.118],
        e_n: vec![3.94, 4.84],
        kappa: vec![vec![0.037, -0.254], vec![-0.105, 0.149], vec![0.0, 0.0]],
        lambda: vec![(2, 0, 1, 0.262)],
        occupation: 1,
        rbar0: vec![0.0; 3],
        var_rbar: vec![0.5; 3],
        var_pbar: vec![0.5; 3],
    })
}

/// 24-mode, 2-state pyrazine model; mode 1 carries the interstate coupling.
pub fn lvcm_pyrazine24() -> ModelDefinition {
    #[rustfmt::skip]
    const MODES: [(f64, f64, f64); 24] = [
        (0.0936,  0.0,     0.0),
        (0.0740, -0.0964,  0.1194),
        (0.1273,  0.0470,  0.2012),
        (0.1568,  0.1594,  0.0484),
        (0.1347,  0.0308, -0.0308),
        (0.3431,  0.0782, -0.0782),
        (0.1157,  0.0261, -0.0261),
        (0.3242,  0.0717, -0.0717),
        (0.3621,  0.0780, -0.0780),
        (0.2673,  0.0560, -0.0560),
        (0.3052,  0.0625, -0.0625),
        (0.0968,  0.0188, -0.0188),
        (0.0589,  0.0112, -0.0112),
        (0.0400,  0.0069, -0.0069),
        (0.1726,  0.0265, -0.0265),
        (0.2863,  0.0433, -0.0433),
        (0.2484,  0.0361, -0.0361),
        (0.1536,  0.0210, -0.0210),
        (0.2105,  0.0281, -0.0281),
        (0.0778,  0.0102, -0.0102),
        (0.2294,  0.0284, -0.0284),
        (0.1915,  0.0196, -0.0196),
        (0.4000,  0.0306, -0.0306),
        (0.3810,  0.0269, -0.0269),
    ];
    lvcm(LvcmSpec {
        label: "lvcm_pyrazine24",
        omega: MODES.iter().map(|m| m.0).collect(),
        e_n: vec![-0.4617, 0.4617],
        kappa: MODES.iter().map(|m| vec![m.1, m.2]).collect(),
        lambda: vec![(0, 0, 1, 0.1825)],
        occupation: 1,
        rbar0: vec![0.0; 24],
        var_rbar: vec![0.5; 24],
        var_pbar: vec![0.5; 24],
    })
}

/// 2-mode, 3-state Jahn-Teller model of Cr(CO)5 photodissociation; the second
/// diabatic state starts occupied from a displaced Gaussian (dimensionless
/// center 14.3514 on mode 2).
pub fn lvcm_crco5() -> ModelDefinition {
    let alpha = [0.4501f64, 0.4586f64];
    lvcm(LvcmSpec {
        label: "lvcm_crco5",
        omega: vec![0.0129, 0.0129],
        e_n: vec![0.0424, 0.0424, 0.4344],
        kappa: vec![vec![0.0, 0.0, 0.0], vec![-0.0328, 0.0328, 0.0]],
        lambda: vec![(0, 0, 1, 0.0328), (0, 1, 2, -0.0978), (1, 0, 2, -0.0978)],
        occupation: 1,
        rbar0: vec![0.0, 14.3514],
        var_rbar: alpha.iter().map(|a| a * a).collect(),
        var_pbar: alpha.iter().map(|a| 0.25 / (a * a)).collect(),
    })
}

/// Linear two-level crossing swept at constant velocity by a heavy nucleus:
/// V11 = slope*R, V22 = -slope*R, V12 = delta. Deterministic point initial
/// conditions; used for transition-probability studies against closed-form
/// and numerically exact sweep references.
pub fn linear_sweep(slope: f64, delta: f64, mass: f64, r_start: f64, velocity: f64) -> ModelDefinition {
    ModelDefinition {
        label: "linear_sweep".to_string(),
        f: 2,
        n: 1,
        masses: DVector::from_element(1, mass),
        kind: ModelKind::Analytic1D(Analytic1D::LinearCrossing { slope, delta }),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation: 0,
            occupation_rep: Representation::Diabatic,
            nuclear: NuclearInit::Point {
                r0: DVector::from_element(1, r_start),
                p0: DVector::from_element(1, mass * velocity),
            },
        },
        defaults: RunDefaults { dt: 1.0, n_traj: 10_000 },
        obs_scale_r: ones(1),
        obs_scale_p: ones(1),
        grid_hint: None,
    }
}

/// Uncoupled harmonic surfaces (single-surface limit checks).
pub fn harmonic_diag(e0: Vec<f64>, omega: f64, mass: f64, r0: f64, p0: f64) -> ModelDefinition {
    let f = e0.len();
    ModelDefinition {
        label: "harmonic_diag".to_string(),
        f,
        n: 1,
        masses: DVector::from_element(1, mass),
        kind: ModelKind::Analytic1D(Analytic1D::HarmonicDiag { e0, omega, mass }),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation: 0,
            occupation_rep: Representation::Adiabatic,
            nuclear: NuclearInit::Point {
                r0: DVector::from_element(1, r0),
                p0: DVector::from_element(1, p0),
            },
        },
        defaults: RunDefaults { dt: 0.01, n_traj: 1 },
        obs_scale_r: ones(1),
        obs_scale_p: ones(1),
        grid_hint: None,
    }
}

/// Constant diabatic matrix with zero gradient (frozen-nuclei limit).
pub fn constant_v(v: DMatrix<f64>, occupation: usize) -> ModelDefinition {
    let f = v.nrows();
    ModelDefinition {
        label: "constant_v".to_string(),
        f,
        n: 1,
        masses: DVector::from_element(1, 1.0),
        kind: ModelKind::Analytic1D(Analytic1D::ConstantV { v }),
        hard_wall_eligible: false,
        init: InitialConditions {
            occupation,
            occupation_rep: Representation::Diabatic,
            nuclear: NuclearInit::Point {
                r0: DVector::from_element(1, 0.0),
                p0: DVector::from_element(1, 0.0),
            },
        },
        defaults: RunDefaults { dt: 0.01, n_traj: 1000 },
        obs_scale_r: ones(1),
        obs_scale_p: ones(1),
        grid_hint: None,
    }
}
