//! Trajectory propagation. Three integrator families share one state type:
//!
//! * surface field (`naf`, `naf_s`, `naf_ehrenfest`, `naf_gdtwa`): single
//!   occupied surface plus an intrinsic nonadiabatic force, surface switching
//!   by weight, and mapping-energy conservation through momentum rescaling;
//! * hopping (`fssh`, `fs_naf`): stochastic surface switches from amplitude
//!   fluxes with momentum adjustment along the coupling vector;
//! * mean field (`ehrenfest`, `mean_field_cps`, `gdtwa`): one averaged force,
//!   propagated in either representation.
//!
//! The electronic payload is the method's phase-space carrier: sphere
//! variables with a commutator matrix, plain amplitudes, or a discrete
//! kernel matrix. Every family reads the same real force-weight matrix off
//! the payload, so forces and estimators never care which method produced
//! the trajectory.

pub mod electronic;
pub mod hopping;
pub mod meanfield;
pub mod naf;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::adiabatic::{build_frame, AdiabaticFrame, FrameWorkspace};
use crate::models::{ModelDefinition, Representation};
use crate::sampling;
use crate::{NafError, Result};

pub use electronic::ElectronicStepping;

/// Maximum depth of recursive step halving before a trajectory is declared
/// failed.
pub const MAX_HALVING_DEPTH: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Naf,
    NafS,
    NafEhrenfest,
    NafGdtwa,
    FsNaf,
    Fssh,
    Ehrenfest,
    MeanFieldCps,
    Gdtwa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Cps,
    Amplitudes,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `stochastic`: surface selection by weight-proportional draw instead
    /// of the deterministic maximum.
    SurfaceField { stochastic: bool },
    /// `field_force`: include the off-diagonal force term and restore the
    /// mapping energy each step (hopping otherwise left untouched).
    Hopping { field_force: bool },
    MeanField,
}

impl MethodKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "naf" => MethodKind::Naf,
            "naf_s" => MethodKind::NafS,
            "naf_ehrenfest" => MethodKind::NafEhrenfest,
            "naf_gdtwa" => MethodKind::NafGdtwa,
            "fs_naf" => MethodKind::FsNaf,
            "fssh" => MethodKind::Fssh,
            "ehrenfest" => MethodKind::Ehrenfest,
            "mean_field_cps" => MethodKind::MeanFieldCps,
            "gdtwa" => MethodKind::Gdtwa,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Naf => "naf",
            MethodKind::NafS => "naf_s",
            MethodKind::NafEhrenfest => "naf_ehrenfest",
            MethodKind::NafGdtwa => "naf_gdtwa",
            MethodKind::FsNaf => "fs_naf",
            MethodKind::Fssh => "fssh",
            MethodKind::Ehrenfest => "ehrenfest",
            MethodKind::MeanFieldCps => "mean_field_cps",
            MethodKind::Gdtwa => "gdtwa",
        }
    }

    pub fn all() -> &'static [MethodKind] {
        &[
            MethodKind::Naf,
            MethodKind::NafS,
            MethodKind::NafEhrenfest,
            MethodKind::NafGdtwa,
            MethodKind::FsNaf,
            MethodKind::Fssh,
            MethodKind::Ehrenfest,
            MethodKind::MeanFieldCps,
            MethodKind::Gdtwa,
        ]
    }

    pub fn payload_kind(&self) -> PayloadKind {
        match self {
            MethodKind::Naf | MethodKind::NafS | MethodKind::MeanFieldCps => PayloadKind::Cps,
            MethodKind::NafEhrenfest
            | MethodKind::FsNaf
            | MethodKind::Fssh
            | MethodKind::Ehrenfest => PayloadKind::Amplitudes,
            MethodKind::NafGdtwa | MethodKind::Gdtwa => PayloadKind::Kernel,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            MethodKind::Naf | MethodKind::NafEhrenfest | MethodKind::NafGdtwa => {
                Family::SurfaceField { stochastic: false }
            }
            MethodKind::NafS => Family::SurfaceField { stochastic: true },
            MethodKind::FsNaf => Family::Hopping { field_force: true },
            MethodKind::Fssh => Family::Hopping { field_force: false },
            MethodKind::Ehrenfest | MethodKind::MeanFieldCps | MethodKind::Gdtwa => {
                Family::MeanField
            }
        }
    }

    /// Mean-field methods choose their propagation representation; the
    /// surface-following families require the adiabatic one.
    pub fn fixes_adiabatic(&self) -> bool {
        !matches!(self.family(), Family::MeanField)
    }

    pub fn uses_sphere(&self) -> bool {
        self.payload_kind() == PayloadKind::Cps
    }
}

/// Everything the integrators need to know about the method beyond the model.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub stepping: ElectronicStepping,
    /// Propagation representation; ignored (forced adiabatic) except for the
    /// mean-field family.
    pub representation: Representation,
    /// Sphere parameter; ignored by non-sphere payloads.
    pub gamma: f64,
    /// Reflect (R <= 0, P <= 0) coordinates; validated upstream to
    /// mean-field methods on bond-length models.
    pub hard_wall: bool,
}

impl MethodSpec {
    pub fn new(kind: MethodKind, f: usize) -> Self {
        MethodSpec {
            kind,
            stepping: ElectronicStepping::DiabaticTransform,
            representation: if kind.fixes_adiabatic() {
                Representation::Adiabatic
            } else {
                Representation::Diabatic
            },
            gamma: sampling::gamma_default(f),
            hard_wall: false,
        }
    }

    pub fn propagation_rep(&self) -> Representation {
        if self.kind.fixes_adiabatic() {
            Representation::Adiabatic
        } else {
            self.representation
        }
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    Cps { g: DVector<Complex64>, gamma_mat: DMatrix<Complex64> },
    Amplitudes { c: DVector<Complex64> },
    Kernel { k: DMatrix<Complex64> },
}

impl Payload {
    /// Real force-weight matrix: the single object the forces, switching
    /// rules, and estimators contract against.
    pub fn force_weights(&self, rho: &mut DMatrix<f64>) {
        let f = rho.nrows();
        match self {
            Payload::Cps { g, gamma_mat } => {
                for n in 0..f {
                    for m in 0..f {
                        rho[(n, m)] = 0.5 * (g[n] * g[m].conj()).re - gamma_mat[(n, m)].re;
                    }
                }
            }
            Payload::Amplitudes { c } => {
                for n in 0..f {
                    for m in 0..f {
                        rho[(n, m)] = (c[n] * c[m].conj()).re;
                    }
                }
            }
            Payload::Kernel { k } => {
                for n in 0..f {
                    for m in 0..f {
                        rho[(n, m)] = k[(n, m)].re;
                    }
                }
            }
        }
    }

    /// One electronic step: vectors map as z -> A z, matrices as
    /// M -> A M A^dagger.
    pub fn apply_unitary(&mut self, a: &DMatrix<Complex64>) {
        match self {
            Payload::Cps { g, gamma_mat } => {
                *g = a * &*g;
                *gamma_mat = a * &*gamma_mat * a.adjoint();
            }
            Payload::Amplitudes { c } => {
                *c = a * &*c;
            }
            Payload::Kernel { k } => {
                *k = a * &*k * a.adjoint();
            }
        }
    }

    /// Basis change with a real orthogonal matrix: `transpose` rotates into
    /// the eigenframe (T^T z), otherwise back out of it (T z).
    pub fn rotate_orthogonal(&mut self, t: &DMatrix<f64>, transpose: bool) {
        let tc = crate::linalg::to_complex(t);
        let a = if transpose { tc.transpose() } else { tc };
        self.apply_unitary(&a);
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub time: f64,
    pub r: DVector<f64>,
    pub p: DVector<f64>,
    pub rep: Representation,
    pub payload: Payload,
    /// occupied surface for the surface-field and hopping families
    pub active: usize,
    /// conserved reference energy: kinetic plus active-surface (or
    /// mean-field) potential at t = 0
    pub h0: f64,
    /// trajectory estimator weight fixed at sampling time
    pub w0: f64,
    /// eigenframe at the current geometry (adiabatic propagation only)
    pub frame: Option<AdiabaticFrame>,
    pub rng: ChaCha8Rng,
}

/// Reusable per-trajectory work buffers.
pub struct Scratch {
    pub frame_ws: FrameWorkspace,
    pub rho: DMatrix<f64>,
    pub force: DVector<f64>,
    pub nac: DMatrix<f64>,
    pub veff: DMatrix<Complex64>,
    pub dvec: DVector<f64>,
    pub grad: DVector<f64>,
}

impl Scratch {
    pub fn new(model: &ModelDefinition) -> Self {
        Scratch {
            frame_ws: FrameWorkspace::new(model),
            rho: DMatrix::zeros(model.f, model.f),
            force: DVector::zeros(model.n),
            nac: DMatrix::zeros(model.f, model.f),
            veff: DMatrix::zeros(model.f, model.f),
            dvec: DVector::zeros(model.n),
            grad: DVector::zeros(model.n),
        }
    }
}

pub fn kinetic_energy(p: &DVector<f64>, masses: &DVector<f64>) -> f64 {
    0.5 * p.iter().zip(masses.iter()).map(|(pj, mj)| pj * pj / mj).sum::<f64>()
}

/// Branches an integrator step can take that the surrounding run needs to
/// know about (tallies, regression tests).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    SwitchAccepted,
    SwitchFrustrated,
    SubstepHalving,
    HardWallReflection,
}

/// What one `advance` call did besides mutating the state in place.
#[derive(Debug, Clone, Default)]
pub struct StepOutcome {
    pub events: Vec<StepEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rescale {
    Done,
    /// target kinetic energy below tolerance (or positive with nothing to
    /// scale): caller decides between keeping the old surface and halving
    /// the step
    Frustrated,
}

/// Scale the momentum vector so the kinetic energy hits `target`. Targets
/// inside [-1e-12 |h_ref|, 0] clamp to zero momentum; more negative targets
/// are refused, as is a positive target on a zero momentum vector (the
/// scaling direction is undefined).
pub fn rescale_along_p(
    p: &mut DVector<f64>,
    masses: &DVector<f64>,
    target: f64,
    h_ref: f64,
) -> Rescale {
    let band = 1e-12 * h_ref.abs().max(1.0e-300);
    if target < -band {
        return Rescale::Frustrated;
    }
    if target <= 0.0 {
        p.fill(0.0);
        return Rescale::Done;
    }
    let ke = kinetic_energy(p, masses);
    if ke <= 0.0 {
        return Rescale::Frustrated;
    }
    *p *= (target / ke).sqrt();
    Rescale::Done
}

/// Momentum shift along `d` paying the energy difference `de`: solves
/// (1/2) s^2 d^T M^-1 d + s P^T M^-1 d + de = 0 and returns the real root
/// of smaller magnitude, or None when no real solution exists.
pub fn hop_momentum_shift(
    p: &DVector<f64>,
    masses: &DVector<f64>,
    d: &DVector<f64>,
    de: f64,
) -> Option<f64> {
    let a: f64 = 0.5 * d.iter().zip(masses.iter()).map(|(dj, mj)| dj * dj / mj).sum::<f64>();
    let b: f64 = p
        .iter()
        .zip(d.iter())
        .zip(masses.iter())
        .map(|((pj, dj), mj)| pj * dj / mj)
        .sum();
    if a == 0.0 {
        // coupling vector vanished: no direction to pay along
        return if de == 0.0 { Some(0.0) } else { None };
    }
    let disc = b * b - 4.0 * a * de;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let r1 = (-b + sq) / (2.0 * a);
    let r2 = (-b - sq) / (2.0 * a);
    Some(if r1.abs() <= r2.abs() { r1 } else { r2 })
}

/// Draw an initial trajectory: nuclear coordinates, the electronic payload
/// in the propagation representation, the occupied surface, the reference
/// energy, and the estimator weight.
pub fn initialize(
    model: &ModelDefinition,
    spec: &MethodSpec,
    seed: u64,
    trajectory_index: u64,
    scratch: &mut Scratch,
) -> Result<TrajectoryState> {
    let mut rng = sampling::trajectory_rng(seed, trajectory_index);
    let (r, p) = sampling::sample_nuclear(&model.init.nuclear, &mut rng);
    let jocc = model.init.occupation;
    let occ_rep = model.init.occupation_rep;
    let prop_rep = spec.propagation_rep();

    // electronic draw in the representation the occupation refers to
    let (mut payload, w0) = match spec.kind.payload_kind() {
        PayloadKind::Cps => {
            let s = sampling::sample_cps(model.f, spec.gamma, jocc, &mut rng);
            (Payload::Cps { g: s.g, gamma_mat: s.gamma_mat }, s.w0)
        }
        PayloadKind::Amplitudes => {
            (Payload::Amplitudes { c: sampling::sample_amplitude(model.f, jocc, &mut rng) }, 1.0)
        }
        PayloadKind::Kernel => {
            (Payload::Kernel { k: sampling::sample_kernel(model.f, jocc, &mut rng) }, 1.0)
        }
    };

    let frame = if prop_rep == Representation::Adiabatic || occ_rep != prop_rep {
        Some(build_frame(model, &r, None, &mut scratch.frame_ws)?)
    } else {
        None
    };
    if occ_rep != prop_rep {
        let t = &frame.as_ref().unwrap().t;
        // diabatic -> adiabatic uses T^T, the reverse uses T
        payload.rotate_orthogonal(t, prop_rep == Representation::Adiabatic);
    }

    let ke = kinetic_energy(&p, &model.masses);
    let (active, h0) = match spec.kind.family() {
        Family::SurfaceField { .. } => {
            payload.force_weights(&mut scratch.rho);
            let mut j = 0;
            for k in 1..model.f {
                if scratch.rho[(k, k)] > scratch.rho[(j, j)] {
                    j = k;
                }
            }
            (j, ke + frame.as_ref().unwrap().e[j])
        }
        Family::Hopping { .. } => {
            let c = match &payload {
                Payload::Amplitudes { c } => c,
                _ => unreachable!(),
            };
            let xi: f64 = rng.random();
            let mut acc = 0.0;
            let mut j = model.f - 1;
            for k in 0..model.f {
                acc += c[k].norm_sqr();
                if xi < acc {
                    j = k;
                    break;
                }
            }
            (j, ke + frame.as_ref().unwrap().e[j])
        }
        Family::MeanField => {
            payload.force_weights(&mut scratch.rho);
            let pot = match prop_rep {
                Representation::Adiabatic => {
                    let fr = frame.as_ref().unwrap();
                    let mut e = 0.0;
                    for k in 0..model.f {
                        e += fr.e[k] * scratch.rho[(k, k)];
                    }
                    e
                }
                Representation::Diabatic => {
                    model.potential(&r, &mut scratch.frame_ws.v);
                    let mut e = 0.0;
                    for k in 0..model.f {
                        for l in 0..model.f {
                            e += scratch.rho[(k, l)] * scratch.frame_ws.v[(l, k)];
                        }
                    }
                    e
                }
            };
            (0, ke + pot)
        }
    };

    let frame = if prop_rep == Representation::Adiabatic { frame } else { None };
    Ok(TrajectoryState {
        time: 0.0,
        r,
        p,
        rep: prop_rep,
        payload,
        active,
        h0,
        w0,
        frame,
        rng,
    })
}

/// One full time step with the integrator the method calls for. The state is
/// mutated in place; the outcome lists which special branches fired.
pub fn advance(
    model: &ModelDefinition,
    spec: &MethodSpec,
    state: &mut TrajectoryState,
    dt: f64,
    scratch: &mut Scratch,
) -> Result<StepOutcome> {
    let mut outcome = StepOutcome::default();
    match spec.kind.family() {
        Family::SurfaceField { stochastic } => {
            naf::step(model, spec, state, dt, stochastic, scratch, &mut outcome.events)?
        }
        Family::Hopping { field_force } => {
            hopping::step(model, spec, state, dt, field_force, scratch, &mut outcome.events)?
        }
        Family::MeanField => meanfield::step(model, spec, state, dt, scratch, &mut outcome.events)?,
    }
    if !state.r.iter().chain(state.p.iter()).all(|x| x.is_finite()) {
        return Err(NafError::numerical(format!(
            "trajectory diverged: non-finite phase-space coordinate at t = {}",
            state.time
        )));
    }
    Ok(outcome)
}
