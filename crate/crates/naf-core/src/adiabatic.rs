//! Adiabatic representation: eigenframes of the diabatic potential matrix,
//! Hellmann-Feynman nonadiabatic couplings, adiabatic gradients, force
//! contractions, and the complex effective electronic generator.
//!
//! A frame carries one of two gradient backends:
//!
//! * `Dense` keeps the sandwiched gradient matrices W^J = T^T (dV/dR_J) T and
//!   the coupling tensor d^J explicitly; fine for few-DOF models and the
//!   generic entry point [`dense_frame`].
//! * `Structured` keeps only the sandwiched coupling operators of a
//!   [`LinearCoupling`] model, so force and coupling contractions cost
//!   O(N + F^3) per step instead of O(N F^2). Both backends agree to
//!   rounding; tests enforce it.
//!
//! Continuity: frames built along a trajectory are order- and sign-aligned to
//! the previous frame's transformation matrix, so couplings stay smooth
//! through avoided crossings. Fresh frames (no predecessor) are ascending in
//! energy with each column's largest-magnitude entry positive.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::sym_eigen;
use crate::models::ModelDefinition;
use crate::{NafError, Result};

/// Surfaces closer than this (hartree) are treated as degenerate; the
/// Hellmann-Feynman division is refused rather than regularized.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AdiabaticFrame {
    /// adiabatic energies; ascending for fresh frames, continuity-ordered
    /// along trajectories
    pub e: DVector<f64>,
    /// orthogonal transformation, columns are adiabatic states in the
    /// diabatic basis
    pub t: DMatrix<f64>,
    /// smallest pairwise gap |E_k - E_l|
    pub min_gap: f64,
    pub grads: FrameGrads,
}

#[derive(Debug, Clone)]
pub enum FrameGrads {
    Dense {
        /// W^J = T^T (dV/dR_J) T
        w: Vec<DMatrix<f64>>,
        /// d^J_kl = W^J_kl/(E_l - E_k), zero diagonal, antisymmetric
        d: Vec<DMatrix<f64>>,
    },
    Structured {
        /// T^T S_m T per distinct coupling operator
        w_ops: Vec<DMatrix<f64>>,
    },
}

/// Eigendecomposition of `v` plus alignment and degeneracy checks, shared by
/// both frame constructors.
fn eigenframe(v: &DMatrix<f64>, prev: Option<&DMatrix<f64>>) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let (mut e, mut t) = sym_eigen(v)?;
    let f = e.len();
    match prev {
        Some(tp) => align_to_previous(&mut e, &mut t, tp),
        None => {
            // gauge: largest-|entry| of each column positive
            for k in 0..f {
                let col = t.column(k);
                let mut imax = 0;
                for i in 1..f {
                    if col[i].abs() > col[imax].abs() {
                        imax = i;
                    }
                }
                if col[imax] < 0.0 {
                    t.column_mut(k).neg_mut();
                }
            }
        }
    }
    let mut min_gap = f64::INFINITY;
    for k in 0..f {
        for l in (k + 1)..f {
            min_gap = min_gap.min((e[k] - e[l]).abs());
        }
    }
    if f > 1 && min_gap < DEGENERACY_THRESHOLD {
        let (mut lo, mut hi, mut best) = (0, 1, f64::INFINITY);
        for k in 0..f {
            for l in (k + 1)..f {
                let g = (e[k] - e[l]).abs();
                if g < best {
                    best = g;
                    lo = k;
                    hi = l;
                }
            }
        }
        return Err(NafError::DegenerateFrame { lower: lo, upper: hi, gap: best });
    }
    Ok((e, t, min_gap))
}

/// Permute and sign-flip columns of (e, t) so diag(T^T T_prev) is large and
/// positive: greedy assignment on |overlap|.
fn align_to_previous(e: &mut DVector<f64>, t: &mut DMatrix<f64>, prev: &DMatrix<f64>) {
    let f = e.len();
    let overlap = t.transpose() * prev; // overlap[i][j] = t_col_i . prev_col_j
    let mut perm = vec![usize::MAX; f]; // slot j <- new column perm[j]
    let mut used_new = vec![false; f];
    let mut used_slot = vec![false; f];
    for _ in 0..f {
        let (mut bi, mut bj, mut bv) = (0, 0, -1.0);
        for i in 0..f {
            if used_new[i] {
                continue;
            }
            for j in 0..f {
                if used_slot[j] {
                    continue;
                }
                if overlap[(i, j)].abs() > bv {
                    bv = overlap[(i, j)].abs();
                    bi = i;
                    bj = j;
                }
            }
        }
        perm[bj] = bi;
        used_new[bi] = true;
        used_slot[bj] = true;
    }
    let e_old = e.clone();
    let t_old = t.clone();
    for j in 0..f {
        let i = perm[j];
        e[j] = e_old[i];
        let mut col = t_old.column(i).clone_owned();
        if overlap[(i, j)] < 0.0 {
            col.neg_mut();
        }
        t.set_column(j, &col);
    }
}

/// Generic frame from explicit potential and dense gradient matrices.
pub fn dense_frame(
    v: &DMatrix<f64>,
    dv: &[DMatrix<f64>],
    prev: Option<&DMatrix<f64>>,
) -> Result<AdiabaticFrame> {
    let (e, t, min_gap) = eigenframe(v, prev)?;
    let f = e.len();
    let mut w = Vec::with_capacity(dv.len());
    let mut d = Vec::with_capacity(dv.len());
    for dvj in dv {
        let wj = t.transpose() * dvj * &t;
        let mut dj = DMatrix::zeros(f, f);
        for k in 0..f {
            for l in 0..f {
                if k != l {
                    dj[(k, l)] = wj[(k, l)] / (e[l] - e[k]);
                }
            }
        }
        w.push(wj);
        d.push(dj);
    }
    Ok(AdiabaticFrame { e, t, min_gap, grads: FrameGrads::Dense { w, d } })
}

/// Frame for a model at nuclear configuration `r`, picking the cheapest
/// gradient backend the model supports. Scratch matrices come from `ws`.
pub fn build_frame(
    model: &ModelDefinition,
    r: &DVector<f64>,
    prev: Option<&DMatrix<f64>>,
    ws: &mut FrameWorkspace,
) -> Result<AdiabaticFrame> {
    model.potential(r, &mut ws.v);
    match model.linear_coupling() {
        Some(lc) => {
            let (e, t, min_gap) = eigenframe(&ws.v, prev)?;
            let w_ops = lc.ops.iter().map(|s| t.transpose() * s * &t).collect();
            Ok(AdiabaticFrame { e, t, min_gap, grads: FrameGrads::Structured { w_ops } })
        }
        None => {
            model.gradient(r, &mut ws.dv);
            dense_frame(&ws.v, &ws.dv, prev)
        }
    }
}

/// Reusable scratch space for frame construction.
pub struct FrameWorkspace {
    pub v: DMatrix<f64>,
    pub dv: Vec<DMatrix<f64>>,
}

impl FrameWorkspace {
    pub fn new(model: &ModelDefinition) -> Self {
        let f = model.f;
        let dense_n = if model.linear_coupling().is_some() { 0 } else { model.n };
        FrameWorkspace {
            v: DMatrix::zeros(f, f),
            dv: (0..dense_n).map(|_| DMatrix::zeros(f, f)).collect(),
        }
    }
}

impl AdiabaticFrame {
    pub fn f(&self) -> usize {
        self.e.len()
    }

    /// Gradient of adiabatic surface `j` with respect to every nuclear DOF.
    pub fn grad_e(&self, model: &ModelDefinition, r: &DVector<f64>, j: usize, out: &mut DVector<f64>) {
        match &self.grads {
            FrameGrads::Dense { w, .. } => {
                for jd in 0..w.len() {
                    out[jd] = w[jd][(j, j)];
                }
            }
            FrameGrads::Structured { w_ops } => {
                let lc = model.linear_coupling().expect("structured frame without coupling data");
                for jd in 0..model.n {
                    out[jd] = lc.omega2[jd] * r[jd] + lc.b[jd] * w_ops[lc.op_index[jd]][(j, j)];
                }
            }
        }
    }

    /// Off-diagonal force contraction sum_{k != l} W^J_{lk} rho_{kl}
    /// (equals sum_{k != l} (E_k - E_l) d^J_{lk} rho_{kl}; no gap divisions).
    fn offdiag_contraction(
        &self,
        model: &ModelDefinition,
        rho: &DMatrix<f64>,
        out: &mut DVector<f64>,
    ) {
        let f = self.f();
        match &self.grads {
            FrameGrads::Dense { w, .. } => {
                for jd in 0..w.len() {
                    let mut acc = 0.0;
                    for k in 0..f {
                        for l in 0..f {
                            if k != l {
                                acc += w[jd][(l, k)] * rho[(k, l)];
                            }
                        }
                    }
                    out[jd] = acc;
                }
            }
            FrameGrads::Structured { w_ops } => {
                let lc = model.linear_coupling().expect("structured frame without coupling data");
                let mut q = vec![0.0; w_ops.len()];
                for (m, wm) in w_ops.iter().enumerate() {
                    let mut acc = 0.0;
                    for k in 0..f {
                        for l in 0..f {
                            if k != l {
                                acc += wm[(l, k)] * rho[(k, l)];
                            }
                        }
                    }
                    q[m] = acc;
                }
                for jd in 0..model.n {
                    out[jd] = lc.b[jd] * q[lc.op_index[jd]];
                }
            }
        }
    }

    /// Force with a single occupied surface plus the off-diagonal
    /// (nonadiabatic) term: F_J = -dE_j/dR_J - sum_{k != l}(E_k - E_l) d_{lk} rho_kl.
    pub fn single_state_force(
        &self,
        model: &ModelDefinition,
        r: &DVector<f64>,
        j: usize,
        rho: &DMatrix<f64>,
        out: &mut DVector<f64>,
    ) {
        self.offdiag_contraction(model, rho, out);
        match &self.grads {
            FrameGrads::Dense { w, .. } => {
                for jd in 0..w.len() {
                    out[jd] = -out[jd] - w[jd][(j, j)];
                }
            }
            FrameGrads::Structured { w_ops } => {
                let lc = model.linear_coupling().expect("structured frame without coupling data");
                for jd in 0..model.n {
                    let ge = lc.omega2[jd] * r[jd] + lc.b[jd] * w_ops[lc.op_index[jd]][(j, j)];
                    out[jd] = -out[jd] - ge;
                }
            }
        }
    }

    /// Mean-field force: F_J = -sum_k dE_k/dR_J rho_kk - sum_{k != l}(E_k - E_l) d_{lk} rho_kl.
    pub fn mean_field_force(
        &self,
        model: &ModelDefinition,
        r: &DVector<f64>,
        rho: &DMatrix<f64>,
        out: &mut DVector<f64>,
    ) {
        self.offdiag_contraction(model, rho, out);
        let f = self.f();
        match &self.grads {
            FrameGrads::Dense { w, .. } => {
                for jd in 0..w.len() {
                    let mut diag = 0.0;
                    for k in 0..f {
                        diag += w[jd][(k, k)] * rho[(k, k)];
                    }
                    out[jd] = -out[jd] - diag;
                }
            }
            FrameGrads::Structured { w_ops } => {
                let lc = model.linear_coupling().expect("structured frame without coupling data");
                let trace: f64 = (0..f).map(|k| rho[(k, k)]).sum();
                let mut diag_q = vec![0.0; w_ops.len()];
                for (m, wm) in w_ops.iter().enumerate() {
                    diag_q[m] = (0..f).map(|k| wm[(k, k)] * rho[(k, k)]).sum();
                }
                for jd in 0..model.n {
                    let diag = lc.omega2[jd] * r[jd] * trace + lc.b[jd] * diag_q[lc.op_index[jd]];
                    out[jd] = -out[jd] - diag;
                }
            }
        }
    }

    /// sum_J (P_J/M_J) d^J as an antisymmetric F x F matrix.
    pub fn nac_dot_velocity(
        &self,
        model: &ModelDefinition,
        p: &DVector<f64>,
        out: &mut DMatrix<f64>,
    ) {
        let f = self.f();
        out.fill(0.0);
        match &self.grads {
            FrameGrads::Dense { d, .. } => {
                for jd in 0..d.len() {
                    let vj = p[jd] / model.masses[jd];
                    if vj != 0.0 {
                        out.iter_mut().zip(d[jd].iter()).for_each(|(x, s)| *x += vj * s);
                    }
                }
            }
            FrameGrads::Structured { w_ops } => {
                let lc = model.linear_coupling().expect("structured frame without coupling data");
                let mut s = vec![0.0; w_ops.len()];
                for jd in 0..model.n {
                    s[lc.op_index[jd]] += p[jd] / model.masses[jd] * lc.b[jd];
                }
                for (m, wm) in w_ops.iter().enumerate() {
                    if s[m] == 0.0 {
                        continue;
                    }
                    for k in 0..f {
                        for l in 0..f {
                            if k != l {
                                out[(k, l)] += s[m] * wm[(k, l)] / (self.e[l] - self.e[k]);
                            }
                        }
                    }
                }
            }
        }
    }

    /// The coupling vector d_{kl} over nuclear DOFs (hop direction).
    pub fn d_vector(&self, model: &ModelDefinition, k: usize, l: usize, out: &mut DVector<f64>) {
        let gap = self.e[l] - self.e[k];
        match &self.grads {
            FrameGrads::Dense { d, .. } => {
                for jd in 0..d.len() {
                    out[jd] = d[jd][(k, l)];
                }
            }
            FrameGrads::Structured { w_ops } => {
                let lc = model.linear_coupling().expect("structured frame without coupling data");
                for jd in 0..model.n {
                    out[jd] = lc.b[jd] * w_ops[lc.op_index[jd]][(k, l)] / gap;
                }
            }
        }
    }

    /// Dense d tensor regardless of backend (diagnostics, small models).
    pub fn dense_d(&self, model: &ModelDefinition) -> Vec<DMatrix<f64>> {
        let f = self.f();
        match &self.grads {
            FrameGrads::Dense { d, .. } => d.clone(),
            FrameGrads::Structured { w_ops } => {
                let lc = model.linear_coupling().expect("structured frame without coupling data");
                (0..model.n)
                    .map(|jd| {
                        let mut dj = DMatrix::zeros(f, f);
                        for k in 0..f {
                            for l in 0..f {
                                if k != l {
                                    dj[(k, l)] = lc.b[jd] * w_ops[lc.op_index[jd]][(k, l)]
                                        / (self.e[l] - self.e[k]);
                                }
                            }
                        }
                        dj
                    })
                    .collect()
            }
        }
    }

    /// Complex effective generator V^eff_nk = E_n delta_nk - i sum_J (P_J/M_J) d^J_nk.
    pub fn effective_potential(
        &self,
        model: &ModelDefinition,
        p: &DVector<f64>,
        nac_scratch: &mut DMatrix<f64>,
        out: &mut DMatrix<Complex64>,
    ) {
        let f = self.f();
        self.nac_dot_velocity(model, p, nac_scratch);
        for k in 0..f {
            for l in 0..f {
                out[(k, l)] = Complex64::new(
                    if k == l { self.e[k] } else { 0.0 },
                    -nac_scratch[(k, l)],
                );
            }
        }
    }
}

/// Canonical adiabatic momentum from the kinematic momentum and the
/// electronic phase-space variables:
/// P~_J = P_J + i sum_{m,n} [g_n g_m^*/2 - Gamma_nm] d^J_mn.
/// The contraction of a Hermitian coefficient with the real antisymmetric
/// coupling is purely imaginary, so the result is real; a residual imaginary
/// part above 1e-10 of the momentum scale is reported as an error.
pub fn canonical_adiabatic_momentum(
    model: &ModelDefinition,
    frame: &AdiabaticFrame,
    p: &DVector<f64>,
    g: &DVector<Complex64>,
    gamma: &DMatrix<Complex64>,
) -> Result<DVector<f64>> {
    let f = frame.f();
    let d = frame.dense_d(model);
    let mut out = DVector::zeros(model.n);
    let scale = p.amax().max(1.0);
    for jd in 0..model.n {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..f {
            for n in 0..f {
                let coeff = 0.5 * g[n] * g[m].conj() - gamma[(n, m)];
                acc += coeff * d[jd][(m, n)];
            }
        }
        let val = Complex64::new(0.0, 1.0) * acc;
        if val.im.abs() > 1e-10 * scale {
            return Err(NafError::numerical(format!(
                "canonical momentum picked up imaginary part {:.3e}",
                val.im
            )));
        }
        out[jd] = p[jd] + val.re;
    }
    Ok(out)
}

/// Curvature diagnostic of the coupling one-form A_J = -i d^J: returns
/// (curl, commutator, total) with
/// total[I][J] = dA_J/dR_I - dA_I/dR_J + i[A_I, A_J],
/// assembled from finite differences of aligned frames at R +- h e_I.
pub struct GaugeTensor {
    pub curl: Vec<Vec<DMatrix<Complex64>>>,
    pub commutator: Vec<Vec<DMatrix<Complex64>>>,
    pub total: Vec<Vec<DMatrix<Complex64>>>,
}

pub fn gauge_tensor_diagnostic(
    model: &ModelDefinition,
    r: &DVector<f64>,
    h: f64,
) -> Result<GaugeTensor> {
    let n = model.n;
    let f = model.f;
    let mut ws = FrameWorkspace::new(model);
    let base = build_frame(model, r, None, &mut ws)?;
    let a_base: Vec<DMatrix<Complex64>> = frame_a(model, &base);

    // dd[i][j] = d(A_J)/dR_I evaluated by central differences
    let mut dd: Vec<Vec<DMatrix<Complex64>>> = vec![vec![DMatrix::zeros(f, f); n]; n];
    for i in 0..n {
        let mut rp = r.clone();
        let mut rm = r.clone();
        rp[i] += h;
        rm[i] -= h;
        let fp = build_frame(model, &rp, Some(&base.t), &mut ws)?;
        let fm = build_frame(model, &rm, Some(&base.t), &mut ws)?;
        let ap = frame_a(model, &fp);
        let am = frame_a(model, &fm);
        for j in 0..n {
            dd[i][j] = (&ap[j] - &am[j]) / Complex64::new(2.0 * h, 0.0);
        }
    }

    let mut curl = vec![vec![DMatrix::<Complex64>::zeros(f, f); n]; n];
    let mut comm = vec![vec![DMatrix::<Complex64>::zeros(f, f); n]; n];
    let mut total = vec![vec![DMatrix::<Complex64>::zeros(f, f); n]; n];
    for i in 0..n {
        for j in 0..n {
            curl[i][j] = &dd[i][j] - &dd[j][i];
            let c = &a_base[i] * &a_base[j] - &a_base[j] * &a_base[i];
            comm[i][j] = c * Complex64::new(0.0, 1.0);
            total[i][j] = &curl[i][j] + &comm[i][j];
        }
    }
    Ok(GaugeTensor { curl, commutator: comm, total })
}

fn frame_a(model: &ModelDefinition, frame: &AdiabaticFrame) -> Vec<DMatrix<Complex64>> {
    frame
        .dense_d(model)
        .into_iter()
        .map(|dj| dj.map(|x| Complex64::new(0.0, -x)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::catalog;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn probe_r(model: &ModelDefinition, seed: f64) -> DVector<f64> {
        DVector::from_fn(model.n, |j, _| {
            0.4 * ((j as f64 + seed) * 1.3).sin()
                + if model.hard_wall_eligible { 3.2 } else { 0.1 }
        })
    }

    #[test]
    fn recomposition_and_ascending_order() {
        let model = catalog::tully_sac(10.0);
        let r = DVector::from_element(1, -0.4);
        let mut ws = FrameWorkspace::new(&model);
        let frame = build_frame(&model, &r, None, &mut ws).unwrap();
        assert!(frame.e[0] < frame.e[1]);
        let mut v = DMatrix::zeros(2, 2);
        model.potential(&r, &mut v);
        let rec = &frame.t * DMatrix::from_diagonal(&frame.e) * frame.t.transpose();
        for (a, b) in rec.iter().zip(v.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn coupling_antisymmetric_zero_diagonal() {
        let model = catalog::photodissociation(2).unwrap();
        let r = DVector::from_element(1, 3.5);
        let mut ws = FrameWorkspace::new(&model);
        let frame = build_frame(&model, &r, None, &mut ws).unwrap();
        let d = frame.dense_d(&model);
        for k in 0..3 {
            assert_eq!(d[0][(k, k)], 0.0);
            for l in 0..3 {
                assert_abs_diff_eq!(d[0][(k, l)], -d[0][(l, k)], epsilon = 1e-12);
            }
        }
    }

    /// Independent oracle: d_kl from central differences of aligned
    /// eigenvector frames, d_kl ~ [T(R)^T T(R+h)]_kl antisymmetrized.
    #[test]
    fn hellmann_feynman_matches_eigenvector_differences() {
        let models = [
            catalog::tully_sac(10.0),
            catalog::tully_ecr(10.0),
            catalog::asym_sac(12.0),
            catalog::photodissociation(1).unwrap(),
        ];
        for model in &models {
            for &rval in &[-2.0, -0.5, 0.3, 1.7] {
                let r = DVector::from_element(
                    1,
                    rval + if model.hard_wall_eligible { 5.0 } else { 0.0 },
                );
                let mut ws = FrameWorkspace::new(&model.clone());
                let frame = build_frame(model, &r, None, &mut ws).unwrap();
                let h = 1e-6;
                let rp = DVector::from_element(1, r[0] + h);
                let rm = DVector::from_element(1, r[0] - h);
                let fp = build_frame(model, &rp, Some(&frame.t), &mut ws).unwrap();
                let fm = build_frame(model, &rm, Some(&frame.t), &mut ws).unwrap();
                let op = frame.t.transpose() * &fp.t;
                let om = frame.t.transpose() * &fm.t;
                let fd = (op - om) / (2.0 * h);
                let d = frame.dense_d(model);
                for k in 0..model.f {
                    for l in 0..model.f {
                        if k != l {
                            assert_abs_diff_eq!(d[0][(k, l)], fd[(k, l)], epsilon = 2e-5);
                        }
                    }
                }
            }
        }
    }

    /// Two-state magnitude check against the closed-form expression
    /// |d12| = |V12'(V11-V22) - V12 (V11-V22)'| / ((V11-V22)^2 + 4 V12^2).
    #[test]
    fn two_state_closed_form() {
        let model = catalog::tully_sac(10.0);
        for &rv in &[-1.5, -0.3, 0.2, 0.9, 2.4] {
            let r = DVector::from_element(1, rv);
            let mut ws = FrameWorkspace::new(&model);
            let frame = build_frame(&model, &r, None, &mut ws).unwrap();
            let mut v = DMatrix::zeros(2, 2);
            let mut dv = DMatrix::zeros(2, 2);
            model.potential(&r, &mut v);
            model.gradient(&r, std::slice::from_mut(&mut dv));
            let dvdiff = v[(0, 0)] - v[(1, 1)];
            let num = dv[(0, 1)] * dvdiff - v[(0, 1)] * (dv[(0, 0)] - dv[(1, 1)]);
            let den = dvdiff * dvdiff + 4.0 * v[(0, 1)] * v[(0, 1)];
            let expect = (num / den).abs();
            let d = frame.dense_d(&model);
            assert_relative_eq!(d[0][(0, 1)].abs(), expect, max_relative = 1e-10);
        }
    }

    /// Structured and dense backends agree on every contraction.
    #[test]
    fn structured_matches_dense() {
        let models = [
            catalog::spin_boson(catalog::SpinBosonParams { n_b: 5, ..Default::default() }).unwrap(),
            catalog::fmo7(3, 77.0).unwrap(),
            catalog::lvcm_crco5(),
            catalog::cavity(3, 7).unwrap(),
        ];
        for model in &models {
            let r = probe_r(model, 0.37);
            let mut ws = FrameWorkspace::new(model);
            let frame_s = build_frame(model, &r, None, &mut ws).unwrap();
            // dense reference
            let mut v = DMatrix::zeros(model.f, model.f);
            let mut dv: Vec<DMatrix<f64>> =
                (0..model.n).map(|_| DMatrix::zeros(model.f, model.f)).collect();
            model.potential(&r, &mut v);
            model.gradient(&r, &mut dv);
            let frame_d = dense_frame(&v, &dv, None).unwrap();

            for k in 0..model.f {
                assert_relative_eq!(frame_s.e[k], frame_d.e[k], max_relative = 1e-12);
            }
            let rho = {
                let mut m = DMatrix::zeros(model.f, model.f);
                for k in 0..model.f {
                    for l in 0..model.f {
                        m[(k, l)] = 0.1 * ((k * model.f + l) as f64 + 1.0).sin();
                    }
                }
                let sym = (m.clone() + m.transpose()) * 0.5;
                sym
            };
            let p = DVector::from_fn(model.n, |j, _| ((j as f64) * 0.9).cos());
            let mut f_s = DVector::zeros(model.n);
            let mut f_d = DVector::zeros(model.n);
            frame_s.single_state_force(model, &r, 0, &rho, &mut f_s);
            frame_d.single_state_force(model, &r, 0, &rho, &mut f_d);
            for j in 0..model.n {
                assert_abs_diff_eq!(f_s[j], f_d[j], epsilon = 1e-11 * (1.0 + f_d[j].abs()));
            }
            frame_s.mean_field_force(model, &r, &rho, &mut f_s);
            frame_d.mean_field_force(model, &r, &rho, &mut f_d);
            for j in 0..model.n {
                assert_abs_diff_eq!(f_s[j], f_d[j], epsilon = 1e-11 * (1.0 + f_d[j].abs()));
            }
            let mut k_s = DMatrix::zeros(model.f, model.f);
            let mut k_d = DMatrix::zeros(model.f, model.f);
            frame_s.nac_dot_velocity(model, &p, &mut k_s);
            frame_d.nac_dot_velocity(model, &p, &mut k_d);
            for (a, b) in k_s.iter().zip(k_d.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-11 * (1.0 + b.abs()));
            }
        }
    }

    /// Frozen example: nonadiabatic force term for a 2-state system with
    /// E2-E1 = 0.02, d12 = 1.0, rho12 = 0.25 is -0.01 (single-state force
    /// with a flat surface).
    #[test]
    fn nonadiabatic_force_frozen_value() {
        // Build a dense frame by hand: E = (0, 0.02), T = I, dV chosen so
        // W = T^T dV T has the required off-diagonal coupling.
        // W_12 = d12 (E2 - E1) = 0.02.
        let v = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.02]);
        let dv = vec![DMatrix::from_row_slice(2, 2, &[0.0, 0.02, 0.02, 0.0])];
        let frame = dense_frame(&v, &dv, None).unwrap();
        let d = match &frame.grads {
            FrameGrads::Dense { d, .. } => d[0][(0, 1)],
            _ => unreachable!(),
        };
        assert_relative_eq!(d, 1.0, max_relative = 1e-12);
        let model = catalog::constant_v(v.clone(), 0); // only used for masses/n
        let rho = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 0.0]);
        let mut force = DVector::zeros(1);
        frame.single_state_force(&model, &DVector::zeros(1), 0, &rho, &mut force);
        // dE_0/dR = 0 here, so the whole force is the off-diagonal term
        assert_relative_eq!(force[0], -0.01, max_relative = 1e-12);
    }

    #[test]
    fn effective_potential_shape() {
        let model = catalog::tully_sac(10.0);
        let r = DVector::from_element(1, 0.1);
        let p = DVector::from_element(1, 12.0);
        let mut ws = FrameWorkspace::new(&model);
        let frame = build_frame(&model, &r, None, &mut ws).unwrap();
        let mut nac = DMatrix::zeros(2, 2);
        let mut veff = DMatrix::<Complex64>::zeros(2, 2);
        frame.effective_potential(&model, &p, &mut nac, &mut veff);
        // Hermitian: diag real = E, offdiag purely imaginary, conjugate pair
        assert_relative_eq!(veff[(0, 0)].re, frame.e[0], max_relative = 1e-14);
        assert_eq!(veff[(0, 0)].im, 0.0);
        assert_eq!(veff[(0, 1)].re, 0.0);
        assert_abs_diff_eq!(veff[(0, 1)].im, -veff[(1, 0)].im, epsilon = 1e-15);
        let d = frame.dense_d(&model);
        assert_relative_eq!(
            veff[(0, 1)].im,
            -(p[0] / 2000.0) * d[0][(0, 1)],
            max_relative = 1e-13
        );
    }

    #[test]
    fn degenerate_surfaces_rejected() {
        let v = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        let dv = vec![DMatrix::zeros(2, 2)];
        match dense_frame(&v, &dv, None) {
            Err(NafError::DegenerateFrame { gap, .. }) => assert!(gap < 1e-10),
            other => panic!("expected degeneracy error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn alignment_tracks_order_swap() {
        // Previous frame deliberately ordered against ascending energies:
        // columns swapped. Alignment must follow it.
        let v = DMatrix::from_row_slice(2, 2, &[0.0, 0.001, 0.001, 0.1]);
        let dv = vec![DMatrix::zeros(2, 2)];
        let prev = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let frame = dense_frame(&v, &dv, Some(&prev)).unwrap();
        // slot 0 now holds the (almost) second diabatic state: higher energy first
        assert!(frame.e[0] > frame.e[1]);
        let overlap = frame.t.transpose() * &prev;
        assert!(overlap[(0, 0)] > 0.99 && overlap[(1, 1)] > 0.99);
    }

    #[test]
    fn canonical_momentum_real_and_shifted() {
        let model = catalog::tully_sac(10.0);
        let r = DVector::from_element(1, 0.05);
        let p = DVector::from_element(1, 11.0);
        let mut ws = FrameWorkspace::new(&model);
        let frame = build_frame(&model, &r, None, &mut ws).unwrap();
        let g = DVector::from_vec(vec![Complex64::new(0.8, 0.1), Complex64::new(0.2, -0.5)]);
        let gamma = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.1, 0.0),
                Complex64::new(0.02, 0.03),
                Complex64::new(0.02, -0.03),
                Complex64::new(-0.05, 0.0),
            ],
        );
        let pc = canonical_adiabatic_momentum(&model, &frame, &p, &g, &gamma).unwrap();
        assert!(pc[0].is_finite());
        // hand contraction for the 2-state case:
        // i * sum_{mn} c_nm d_mn with d_12 = -d_21
        let d = frame.dense_d(&model)[0][(0, 1)];
        let c01 = 0.5 * g[1] * g[0].conj() - gamma[(1, 0)]; // c_{n=1,m=0} pairs with d_{01}
        let c10 = 0.5 * g[0] * g[1].conj() - gamma[(0, 1)];
        let shift = (Complex64::new(0.0, 1.0) * (c01 * d + c10 * (-d))).re;
        assert_abs_diff_eq!(pc[0] - p[0], shift, epsilon = 1e-12);
    }

    /// For one nuclear DOF the diagnostic vanishes identically; for two
    /// states the commutator part vanishes for any N.
    #[test]
    fn gauge_tensor_limits() {
        let model = catalog::tully_sac(10.0);
        let gt = gauge_tensor_diagnostic(&model, &DVector::from_element(1, 0.3), 1e-5).unwrap();
        for m in gt.total[0][0].iter() {
            assert_abs_diff_eq!(m.norm(), 0.0, epsilon = 1e-9);
        }

        let model2 =
            catalog::spin_boson(catalog::SpinBosonParams { n_b: 3, ..Default::default() }).unwrap();
        let r = DVector::from_fn(3, |j, _| 0.2 + 0.1 * j as f64);
        let gt2 = gauge_tensor_diagnostic(&model2, &r, 1e-5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for m in gt2.commutator[i][j].iter() {
                    assert_abs_diff_eq!(m.norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
    }
}
