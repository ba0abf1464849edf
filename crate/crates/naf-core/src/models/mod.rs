//! Benchmark model definitions: diabatic potential matrices V(R), their
//! gradients, masses, initial-condition descriptors, and per-model defaults.
//!
//! Two evaluation families cover every model in the suite:
//!
//! * [`LinearCoupling`]: condensed-phase Hamiltonians of the form
//!   `V(R) = (1/2) sum_j omega_j^2 R_j^2 I + H0 + sum_j b_j R_j S_{m(j)}`
//!   with a small set of constant symmetric coupling operators `S_m`.
//!   The structure (which operator each DOF touches) is exposed so the
//!   dynamics can contract forces in O(N + F^3) per step instead of
//!   O(N F^2) dense sandwiches; this is what keeps the 350-600 DOF
//!   site-exciton models affordable.
//! * [`Analytic1D`]: scattering and photodissociation models with one
//!   nuclear DOF and hand-differentiated matrix elements.
//!
//! All quantities are stored in Hartree atomic units with mass-weighted or
//! canonical coordinates as documented per builder in [`catalog`].

pub mod bath;
pub mod catalog;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Diabatic,
    Adiabatic,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Representation::Diabatic => write!(f, "diabatic"),
            Representation::Adiabatic => write!(f, "adiabatic"),
        }
    }
}

/// A complete model: dimensions, masses, potential evaluator, initial
/// conditions, and the defaults the harness applies when a run config leaves
/// them out.
#[derive(Debug, Clone)]
pub struct ModelDefinition {
    pub label: String,
    /// electronic states
    pub f: usize,
    /// nuclear DOFs
    pub n: usize,
    pub masses: DVector<f64>,
    pub kind: ModelKind,
    /// Bond-length models (positive-definite R): mean-field style methods may
    /// reflect the momentum at the origin, single-surface-force methods never do.
    pub hard_wall_eligible: bool,
    pub init: InitialConditions,
    pub defaults: RunDefaults,
    /// Reported coordinate = obs_scale_r[k] * R_k (sqrt(omega) for
    /// dimensionless LVCM modes, 1 elsewhere); same pattern for momenta.
    pub obs_scale_r: DVector<f64>,
    pub obs_scale_p: DVector<f64>,
    /// Suggested grid for the exact 1-D reference propagator.
    pub grid_hint: Option<GridHint>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunDefaults {
    /// time step in atomic units
    pub dt: f64,
    pub n_traj: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GridHint {
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone)]
pub struct InitialConditions {
    /// 0-based index of the initially occupied electronic state
    pub occupation: usize,
    pub occupation_rep: Representation,
    pub nuclear: NuclearInit,
}

#[derive(Debug, Clone)]
pub enum NuclearInit {
    /// Independent Gaussians per DOF. `positive` rejects draws until every
    /// coordinate is positive (bond-length models).
    Gaussian {
        r0: DVector<f64>,
        p0: DVector<f64>,
        var_r: DVector<f64>,
        var_p: DVector<f64>,
        positive: bool,
    },
    /// Deterministic point (single-trajectory and oracle comparisons).
    Point { r0: DVector<f64>, p0: DVector<f64> },
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    LinearCoupling(LinearCoupling),
    Analytic1D(Analytic1D),
}

/// `V(R) = (1/2) sum_j omega2[j] R_j^2 I + h0 + sum_m (sum_{j: op_index[j]=m} b[j] R_j) ops[m]`
#[derive(Debug, Clone)]
pub struct LinearCoupling {
    /// squared harmonic frequency per DOF
    pub omega2: DVector<f64>,
    /// constant electronic matrix, F x F symmetric
    pub h0: DMatrix<f64>,
    /// distinct coupling operators, each F x F symmetric
    pub ops: Vec<DMatrix<f64>>,
    /// which operator each DOF couples through
    pub op_index: Vec<usize>,
    /// linear coupling coefficient per DOF
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct MorseSurface {
    pub d: f64,
    pub beta: f64,
    pub r_eq: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianCoupling {
    /// couples states `i` and `j` (0-based, i < j)
    pub i: usize,
    pub j: usize,
    pub a: f64,
    pub alpha: f64,
    pub r0: f64,
}

#[derive(Debug, Clone)]
pub enum Analytic1D {
    /// V11 = A(1-exp(-B|R|))sgn(R), V22 = -V11, V12 = C exp(-D R^2)
    TullySac { a: f64, b: f64, c: f64, d: f64 },
    /// V11 = 0, V22 = -A exp(-B R^2) + E0, V12 = C exp(-D R^2)
    TullyDac { a: f64, b: f64, c: f64, d: f64, e0: f64 },
    /// V11 = E0, V22 = -E0, V12 = C[exp(BR) h(-R) + (2-exp(-BR)) h(R)]
    TullyEcr { b: f64, c: f64, e0: f64 },
    /// V11 = A1(1+tanh(BR)), V22 = A2(1-tanh(BR)), V12 = C exp(-D(R+Q)^2)
    AsymSac { a1: f64, a2: f64, b: f64, c: f64, d: f64, q: f64 },
    /// Morse diagonals with Gaussian couplings
    MorseGaussian {
        surfaces: Vec<MorseSurface>,
        couplings: Vec<GaussianCoupling>,
    },
    /// V11 = slope*R, V22 = -slope*R, V12 = delta (linear sweep)
    LinearCrossing { slope: f64, delta: f64 },
    /// Uncoupled harmonic surfaces V_nn = e0[n] + (1/2) omega^2 R^2
    /// Uncoupled surfaces sharing one harmonic well (1/2) m omega^2 R^2;
    /// `omega` is the classical oscillation frequency.
    HarmonicDiag { e0: Vec<f64>, omega: f64, mass: f64 },
    /// Constant matrix, zero gradient (frozen-nuclei limit)
    ConstantV { v: DMatrix<f64> },
}

impl ModelDefinition {
    /// Diabatic potential matrix at `r`, written into `v` (F x F).
    pub fn potential(&self, r: &DVector<f64>, v: &mut DMatrix<f64>) {
        debug_assert_eq!(r.len(), self.n);
        debug_assert_eq!(v.nrows(), self.f);
        match &self.kind {
            ModelKind::LinearCoupling(lc) => lc.potential(r, v),
            ModelKind::Analytic1D(a) => a.potential(r[0], v),
        }
    }

    /// Dense gradient: dv[j] = dV/dR_j (each F x F).
    pub fn gradient(&self, r: &DVector<f64>, dv: &mut [DMatrix<f64>]) {
        debug_assert_eq!(dv.len(), self.n);
        match &self.kind {
            ModelKind::LinearCoupling(lc) => lc.gradient(r, dv),
            ModelKind::Analytic1D(a) => a.gradient(r[0], &mut dv[0]),
        }
    }

    /// Structured coupling data for the O(N + F^3) force path, when available.
    pub fn linear_coupling(&self) -> Option<&LinearCoupling> {
        match &self.kind {
            ModelKind::LinearCoupling(lc) => Some(lc),
            ModelKind::Analytic1D(_) => None,
        }
    }

    pub fn is_1d(&self) -> bool {
        self.n == 1
    }
}

impl LinearCoupling {
    pub fn potential(&self, r: &DVector<f64>, v: &mut DMatrix<f64>) {
        let f = self.h0.nrows();
        v.copy_from(&self.h0);
        let mut harmonic = 0.0;
        for j in 0..r.len() {
            harmonic += 0.5 * self.omega2[j] * r[j] * r[j];
        }
        for k in 0..f {
            v[(k, k)] += harmonic;
        }
        // accumulate one scalar per distinct operator, then add scaled operators
        let mut coef = vec![0.0; self.ops.len()];
        for j in 0..r.len() {
            coef[self.op_index[j]] += self.b[j] * r[j];
        }
        for (m, op) in self.ops.iter().enumerate() {
            if coef[m] != 0.0 {
                v.iter_mut().zip(op.iter()).for_each(|(x, s)| *x += coef[m] * s);
            }
        }
    }

    pub fn gradient(&self, r: &DVector<f64>, dv: &mut [DMatrix<f64>]) {
        let f = self.h0.nrows();
        for j in 0..r.len() {
            let g = &mut dv[j];
            g.copy_from(&self.ops[self.op_index[j]]);
            *g *= self.b[j];
            let w2r = self.omega2[j] * r[j];
            for k in 0..f {
                g[(k, k)] += w2r;
            }
        }
    }
}

impl Analytic1D {
    pub fn f(&self) -> usize {
        match self {
            Analytic1D::MorseGaussian { surfaces, .. } => surfaces.len(),
            Analytic1D::HarmonicDiag { e0, .. } => e0.len(),
            Analytic1D::ConstantV { v } => v.nrows(),
            _ => 2,
        }
    }

    pub fn potential(&self, r: f64, v: &mut DMatrix<f64>) {
        match self {
            Analytic1D::TullySac { a, b, c, d } => {
                let v11 = a * (1.0 - (-b * r.abs()).exp()) * r.signum();
                let v12 = c * (-d * r * r).exp();
                v[(0, 0)] = v11;
                v[(1, 1)] = -v11;
                v[(0, 1)] = v12;
                v[(1, 0)] = v12;
            }
            Analytic1D::TullyDac { a, b, c, d, e0 } => {
                let v12 = c * (-d * r * r).exp();
                v[(0, 0)] = 0.0;
                v[(1, 1)] = -a * (-b * r * r).exp() + e0;
                v[(0, 1)] = v12;
                v[(1, 0)] = v12;
            }
            Analytic1D::TullyEcr { b, c, e0 } => {
                let v12 = if r < 0.0 {
                    c * (b * r).exp()
                } else {
                    c * (2.0 - (-b * r).exp())
                };
                v[(0, 0)] = *e0;
                v[(1, 1)] = -e0;
                v[(0, 1)] = v12;
                v[(1, 0)] = v12;
            }
            Analytic1D::AsymSac { a1, a2, b, c, d, q } => {
                let th = (b * r).tanh();
                let v12 = c * (-d * (r + q) * (r + q)).exp();
                v[(0, 0)] = a1 * (1.0 + th);
                v[(1, 1)] = a2 * (1.0 - th);
                v[(0, 1)] = v12;
                v[(1, 0)] = v12;
            }
            Analytic1D::MorseGaussian { surfaces, couplings } => {
                v.fill(0.0);
                for (i, s) in surfaces.iter().enumerate() {
                    let e = 1.0 - (-s.beta * (r - s.r_eq)).exp();
                    v[(i, i)] = s.d * e * e + s.c;
                }
                for g in couplings {
                    let val = g.a * (-g.alpha * (r - g.r0) * (r - g.r0)).exp();
                    v[(g.i, g.j)] = val;
                    v[(g.j, g.i)] = val;
                }
            }
            Analytic1D::LinearCrossing { slope, delta } => {
                v[(0, 0)] = slope * r;
                v[(1, 1)] = -slope * r;
                v[(0, 1)] = *delta;
                v[(1, 0)] = *delta;
            }
            Analytic1D::HarmonicDiag { e0, omega, mass } => {
                v.fill(0.0);
                for (i, e) in e0.iter().enumerate() {
                    v[(i, i)] = e + 0.5 * mass * omega * omega * r * r;
                }
            }
            Analytic1D::ConstantV { v: vc } => v.copy_from(vc),
        }
    }

    pub fn gradient(&self, r: f64, g: &mut DMatrix<f64>) {
        match self {
            Analytic1D::TullySac { a, b, c, d } => {
                let dv11 = a * b * (-b * r.abs()).exp();
                let dv12 = -2.0 * d * r * c * (-d * r * r).exp();
                g[(0, 0)] = dv11;
                g[(1, 1)] = -dv11;
                g[(0, 1)] = dv12;
                g[(1, 0)] = dv12;
            }
            Analytic1D::TullyDac { a, b, c, d, .. } => {
                let dv22 = 2.0 * a * b * r * (-b * r * r).exp();
                let dv12 = -2.0 * d * r * c * (-d * r * r).exp();
                g[(0, 0)] = 0.0;
                g[(1, 1)] = dv22;
                g[(0, 1)] = dv12;
                g[(1, 0)] = dv12;
            }
            Analytic1D::TullyEcr { b, c, .. } => {
                let dv12 = if r < 0.0 {
                    c * b * (b * r).exp()
                } else {
                    c * b * (-b * r).exp()
                };
                g[(0, 0)] = 0.0;
                g[(1, 1)] = 0.0;
                g[(0, 1)] = dv12;
                g[(1, 0)] = dv12;
            }
            Analytic1D::AsymSac { a1, a2, b, c, d, q } => {
                let ch = (b * r).cosh();
                let sech2 = 1.0 / (ch * ch);
                let dv12 = -2.0 * d * (r + q) * c * (-d * (r + q) * (r + q)).exp();
                g[(0, 0)] = a1 * b * sech2;
                g[(1, 1)] = -a2 * b * sech2;
                g[(0, 1)] = dv12;
                g[(1, 0)] = dv12;
            }
            Analytic1D::MorseGaussian { surfaces, couplings } => {
                g.fill(0.0);
                for (i, s) in surfaces.iter().enumerate() {
                    let ex = (-s.beta * (r - s.r_eq)).exp();
                    g[(i, i)] = 2.0 * s.d * s.beta * ex * (1.0 - ex);
                }
                for gc in couplings {
                    let val = -2.0 * gc.alpha * (r - gc.r0)
                        * gc.a
                        * (-gc.alpha * (r - gc.r0) * (r - gc.r0)).exp();
                    g[(gc.i, gc.j)] = val;
                    g[(gc.j, gc.i)] = val;
                }
            }
            Analytic1D::LinearCrossing { slope, .. } => {
                g[(0, 0)] = *slope;
                g[(1, 1)] = -slope;
                g[(0, 1)] = 0.0;
                g[(1, 0)] = 0.0;
            }
            Analytic1D::HarmonicDiag { e0, omega, mass } => {
                g.fill(0.0);
                for i in 0..e0.len() {
                    g[(i, i)] = mass * omega * omega * r;
                }
            }
            Analytic1D::ConstantV { .. } => g.fill(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn central_diff(model: &ModelDefinition, r: &DVector<f64>, j: usize, h: f64) -> DMatrix<f64> {
        let f = model.f;
        let mut rp = r.clone();
        let mut rm = r.clone();
        rp[j] += h;
        rm[j] -= h;
        let mut vp = DMatrix::zeros(f, f);
        let mut vm = DMatrix::zeros(f, f);
        model.potential(&rp, &mut vp);
        model.potential(&rm, &mut vm);
        (vp - vm) / (2.0 * h)
    }

    /// Central-difference oracle for every analytic gradient in the suite.
    #[test]
    fn gradients_match_finite_differences() {
        let models: Vec<ModelDefinition> = vec![
            catalog::spin_boson(catalog::SpinBosonParams { n_b: 4, ..Default::default() }).unwrap(),
            catalog::fmo7(2, 77.0).unwrap(),
            catalog::cavity(3, 6).unwrap(),
            catalog::singlet_fission(3, 300.0).unwrap(),
            catalog::tully_sac(10.0),
            catalog::tully_dac(30.0),
            catalog::tully_ecr(10.0),
            catalog::asym_sac(15.0),
            catalog::photodissociation(1).unwrap(),
            catalog::photodissociation(2).unwrap(),
            catalog::photodissociation(3).unwrap(),
            catalog::lvcm_pyrazine3(),
            catalog::lvcm_pyrazine24(),
            catalog::lvcm_crco5(),
        ];
        for model in &models {
            // a deterministic, slightly awkward probe point
            let r = DVector::from_fn(model.n, |j, _| {
                0.37 * ((j as f64 + 1.0) * 0.7).sin() + 0.11
                    + if model.hard_wall_eligible { 3.0 } else { 0.0 }
            });
            let mut dv: Vec<DMatrix<f64>> = (0..model.n).map(|_| DMatrix::zeros(model.f, model.f)).collect();
            model.gradient(&r, &mut dv);
            let probe: Vec<usize> = if model.n <= 6 {
                (0..model.n).collect()
            } else {
                vec![0, 1, model.n / 2, model.n - 1]
            };
            for &j in &probe {
                let fd = central_diff(model, &r, j, 1e-5);
                // roundoff in the difference quotient scales with the dominant
                // entry of the gradient matrix, not with each entry
                let matrix_scale = fd.amax();
                for i in 0..model.f {
                    for k in 0..model.f {
                        let scale = fd[(i, k)].abs().max(matrix_scale).max(1e-6);
                        assert!(
                            (dv[j][(i, k)] - fd[(i, k)]).abs() / scale < 1e-6,
                            "{}: dV/dR_{} entry ({},{}) analytic {} vs fd {}",
                            model.label,
                            j,
                            i,
                            k,
                            dv[j][(i, k)],
                            fd[(i, k)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn potentials_are_symmetric() {
        let model = catalog::photodissociation(2).unwrap();
        let mut v = DMatrix::zeros(3, 3);
        model.potential(&DVector::from_element(1, 3.3), &mut v);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(v[(i, j)], v[(j, i)], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn tully_sac_at_origin() {
        let model = catalog::tully_sac(10.0);
        let mut v = DMatrix::zeros(2, 2);
        model.potential(&DVector::from_element(1, 0.0), &mut v);
        assert_abs_diff_eq!(v[(0, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(1, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(0, 1)], 0.005, epsilon = 1e-15);
    }

    #[test]
    fn spin_boson_at_zero_bath_displacement() {
        let model =
            catalog::spin_boson(catalog::SpinBosonParams { n_b: 7, ..Default::default() }).unwrap();
        let mut v = DMatrix::zeros(2, 2);
        model.potential(&DVector::zeros(7), &mut v);
        // eps = delta = 1
        assert_abs_diff_eq!(v[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(0, 1)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(1, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(1, 1)], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn ecr_coupling_continuous_at_origin() {
        let model = catalog::tully_ecr(10.0);
        let mut vl = DMatrix::zeros(2, 2);
        let mut vr = DMatrix::zeros(2, 2);
        model.potential(&DVector::from_element(1, -1e-12), &mut vl);
        model.potential(&DVector::from_element(1, 1e-12), &mut vr);
        assert_abs_diff_eq!(vl[(0, 1)], vr[(0, 1)], epsilon = 1e-10);
        assert_abs_diff_eq!(vl[(0, 1)], 0.1, epsilon = 1e-10);
    }
}
