//! Ensemble observables: per-trajectory electronic density estimates, their
//! weighted reduction into time series with standard errors, final-time
//! momentum distributions, and scattering channel tables.
//!
//! Every method reduces to the same pattern: a per-trajectory F x F density
//! estimate (payload dependent), multiplied by the trajectory weight w0 at
//! reduction time, averaged with the plain 1/n normalization (the sphere
//! measure makes E[w0] = 1, so no renormalization by the weight sum).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::adiabatic::build_frame;
use crate::dynamics::{Family, MethodSpec, Payload, Scratch, TrajectoryState};
use crate::linalg::to_complex;
use crate::models::{ModelDefinition, Representation};
use crate::{NafError, Result};

/// Weight attached to a sphere trajectory at sampling time: the time-zero
/// kernel element of the occupied state times the measure factor F.
pub fn electronic_weight0(g0: &DVector<Complex64>, jocc: usize, gamma: f64) -> f64 {
    let f = g0.len() as f64;
    f * (0.5 * g0[jocc].norm_sqr() - gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    /// diagonal density entry
    Population { state: usize },
    /// rho_00 - rho_11 (the standard two-level difference; first two states
    /// for larger F)
    PopulationDifference,
    /// complex off-diagonal entry; reported as the modulus of the ensemble
    /// mean
    Coherence { row: usize, col: usize },
    MeanR { dof: usize },
    MeanP { dof: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservableRequest {
    pub kind: ObservableKind,
    /// representation the electronic entries refer to; ignored by R/P kinds
    pub representation: Representation,
}

impl ObservableRequest {
    pub fn name(&self) -> String {
        let rep = match self.representation {
            Representation::Diabatic => "dia",
            Representation::Adiabatic => "adi",
        };
        match self.kind {
            ObservableKind::Population { state } => format!("pop{state}_{rep}"),
            ObservableKind::PopulationDifference => format!("popdiff_{rep}"),
            ObservableKind::Coherence { row, col } => format!("coh{row}{col}_{rep}"),
            ObservableKind::MeanR { dof } => format!("mean_r{dof}"),
            ObservableKind::MeanP { dof } => format!("mean_p{dof}"),
        }
    }

    pub fn validate(&self, model: &ModelDefinition) -> Result<()> {
        let bad_state = |s: usize| s >= model.f;
        let bad_dof = |d: usize| d >= model.n;
        let err = match self.kind {
            ObservableKind::Population { state } if bad_state(state) => {
                Some(format!("population index {state} out of range (F = {})", model.f))
            }
            ObservableKind::PopulationDifference if model.f < 2 => {
                Some("population difference needs at least two states".into())
            }
            ObservableKind::Coherence { row, col } if bad_state(row) || bad_state(col) => {
                Some(format!("coherence indices ({row},{col}) out of range (F = {})", model.f))
            }
            ObservableKind::Coherence { row, col } if row == col => {
                Some(format!("coherence ({row},{col}) is a population, not a coherence"))
            }
            ObservableKind::MeanR { dof } if bad_dof(dof) => {
                Some(format!("coordinate index {dof} out of range (N = {})", model.n))
            }
            ObservableKind::MeanP { dof } if bad_dof(dof) => {
                Some(format!("momentum index {dof} out of range (N = {})", model.n))
            }
            _ => None,
        };
        match err {
            Some(msg) => Err(NafError::config(msg)),
            None => Ok(()),
        }
    }

    fn is_complex(&self) -> bool {
        matches!(self.kind, ObservableKind::Coherence { .. })
    }
}

/// Per-trajectory electronic density estimate in the requested
/// representation, before the w0 weighting.
///
/// * sphere payload: rho_nm = (1+F)/(2(1+F gamma)^2) g_n g_m^* -
///   (1-gamma)/(1+F gamma) delta_nm, whose trace is exactly 1 on the
///   constraint sphere;
/// * amplitudes, hopping family: diagonal delta on the active surface,
///   off-diagonal c_n c_m^*;
/// * amplitudes otherwise: c c^dagger;
/// * kernel payload: the kernel matrix itself.
pub fn estimate_density(
    model: &ModelDefinition,
    spec: &MethodSpec,
    state: &TrajectoryState,
    out_rep: Representation,
    scratch: &mut Scratch,
) -> Result<DMatrix<Complex64>> {
    let f = model.f;
    let mut rho = match &state.payload {
        Payload::Cps { g, .. } => {
            let gamma = spec.gamma;
            let fd = f as f64;
            let cd = (1.0 + fd) / (2.0 * (1.0 + fd * gamma).powi(2));
            let ci = (1.0 - gamma) / (1.0 + fd * gamma);
            DMatrix::from_fn(f, f, |n, m| {
                let mut v = cd * g[n] * g[m].conj();
                if n == m {
                    v -= Complex64::new(ci, 0.0);
                }
                v
            })
        }
        Payload::Amplitudes { c } => match spec.kind.family() {
            Family::Hopping { .. } => DMatrix::from_fn(f, f, |n, m| {
                if n == m {
                    Complex64::new(if n == state.active { 1.0 } else { 0.0 }, 0.0)
                } else {
                    c[n] * c[m].conj()
                }
            }),
            _ => DMatrix::from_fn(f, f, |n, m| c[n] * c[m].conj()),
        },
        Payload::Kernel { k } => k.clone(),
    };

    if out_rep != state.rep {
        let t = match &state.frame {
            Some(frame) => to_complex(&frame.t),
            None => {
                let frame = build_frame(model, &state.r, None, &mut scratch.frame_ws)?;
                to_complex(&frame.t)
            }
        };
        rho = match out_rep {
            // propagated adiabatic, diabatic requested
            Representation::Diabatic => &t * rho * t.adjoint(),
            // propagated diabatic, adiabatic requested
            Representation::Adiabatic => t.adjoint() * rho * t,
        };
    }
    Ok(rho)
}

/// Evaluate every request at the current state, writing one complex value
/// per request (real observables use the real part slot). w0 is NOT applied
/// here; the accumulator owns the weighting.
pub fn observe(
    model: &ModelDefinition,
    spec: &MethodSpec,
    state: &TrajectoryState,
    requests: &[ObservableRequest],
    scratch: &mut Scratch,
    out: &mut [Complex64],
) -> Result<()> {
    assert_eq!(requests.len(), out.len());
    let needs = |rep: Representation| {
        requests.iter().any(|r| {
            r.representation == rep
                && !matches!(r.kind, ObservableKind::MeanR { .. } | ObservableKind::MeanP { .. })
        })
    };
    let rho_dia = if needs(Representation::Diabatic) {
        Some(estimate_density(model, spec, state, Representation::Diabatic, scratch)?)
    } else {
        None
    };
    let rho_adi = if needs(Representation::Adiabatic) {
        Some(estimate_density(model, spec, state, Representation::Adiabatic, scratch)?)
    } else {
        None
    };
    for (slot, req) in requests.iter().enumerate() {
        let rho = match req.representation {
            Representation::Diabatic => rho_dia.as_ref(),
            Representation::Adiabatic => rho_adi.as_ref(),
        };
        out[slot] = match req.kind {
            ObservableKind::Population { state: s } => rho.unwrap()[(s, s)],
            ObservableKind::PopulationDifference => {
                let r = rho.unwrap();
                r[(0, 0)] - r[(1, 1)]
            }
            ObservableKind::Coherence { row, col } => rho.unwrap()[(row, col)],
            ObservableKind::MeanR { dof } => {
                Complex64::new(model.obs_scale_r[dof] * state.r[dof], 0.0)
            }
            ObservableKind::MeanP { dof } => {
                Complex64::new(model.obs_scale_p[dof] * state.p[dof], 0.0)
            }
        };
    }
    Ok(())
}

/// Reduced observable curves with Monte Carlo errors.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// [request][time]
    pub estimates: Vec<Vec<f64>>,
    pub stderrs: Vec<Vec<f64>>,
    pub n_trajectories: usize,
    pub n_failures: usize,
    /// standard errors are reported as 0 because a single sample has no
    /// spread estimate
    pub single_sample: bool,
}

/// Streaming weighted reduction: component-wise sums and sums of squares of
/// w0 * x over trajectories. Merging two accumulators adds the fields, so
/// parallel partial reductions combine deterministically when merged in a
/// fixed order.
#[derive(Debug, Clone)]
pub struct Accumulator {
    times: Vec<f64>,
    requests: Vec<ObservableRequest>,
    n: usize,
    sum_re: Vec<Vec<f64>>,
    sum_im: Vec<Vec<f64>>,
    sumsq_re: Vec<Vec<f64>>,
    sumsq_im: Vec<Vec<f64>>,
}

impl Accumulator {
    pub fn new(times: Vec<f64>, requests: Vec<ObservableRequest>) -> Self {
        let nt = times.len();
        let nr = requests.len();
        Accumulator {
            times,
            requests,
            n: 0,
            sum_re: vec![vec![0.0; nt]; nr],
            sum_im: vec![vec![0.0; nt]; nr],
            sumsq_re: vec![vec![0.0; nt]; nr],
            sumsq_im: vec![vec![0.0; nt]; nr],
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn requests(&self) -> &[ObservableRequest] {
        &self.requests
    }

    /// Add one trajectory's value vector at time slot `slot`.
    pub fn add_sample(&mut self, slot: usize, values: &[Complex64], w0: f64) {
        for (req, v) in values.iter().enumerate() {
            let re = w0 * v.re;
            let im = w0 * v.im;
            self.sum_re[req][slot] += re;
            self.sum_im[req][slot] += im;
            self.sumsq_re[req][slot] += re * re;
            self.sumsq_im[req][slot] += im * im;
        }
    }

    /// Count one completed trajectory (call once after all its slots).
    pub fn finish_trajectory(&mut self) {
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        assert_eq!(self.times.len(), other.times.len());
        assert_eq!(self.requests.len(), other.requests.len());
        self.n += other.n;
        for req in 0..self.requests.len() {
            for t in 0..self.times.len() {
                self.sum_re[req][t] += other.sum_re[req][t];
                self.sum_im[req][t] += other.sum_im[req][t];
                self.sumsq_re[req][t] += other.sumsq_re[req][t];
                self.sumsq_im[req][t] += other.sumsq_im[req][t];
            }
        }
    }

    pub fn finalize(&self, n_failures: usize) -> TimeSeries {
        let n = self.n.max(1) as f64;
        let single = self.n <= 1;
        let nt = self.times.len();
        let mut estimates = Vec::with_capacity(self.requests.len());
        let mut stderrs = Vec::with_capacity(self.requests.len());
        for (req_idx, req) in self.requests.iter().enumerate() {
            let mut est = Vec::with_capacity(nt);
            let mut err = Vec::with_capacity(nt);
            for t in 0..nt {
                let mean_re = self.sum_re[req_idx][t] / n;
                let mean_im = self.sum_im[req_idx][t] / n;
                let var = |sumsq: f64, mean: f64| {
                    if single {
                        0.0
                    } else {
                        ((sumsq / n - mean * mean) * n / (n - 1.0)).max(0.0)
                    }
                };
                let var_re = var(self.sumsq_re[req_idx][t], mean_re);
                let var_im = var(self.sumsq_im[req_idx][t], mean_im);
                if req.is_complex() {
                    est.push((mean_re * mean_re + mean_im * mean_im).sqrt());
                    err.push(((var_re + var_im) / n).sqrt());
                } else {
                    est.push(mean_re);
                    err.push((var_re / n).sqrt());
                }
            }
            estimates.push(est);
            stderrs.push(err);
        }
        TimeSeries {
            times: self.times.clone(),
            names: self.requests.iter().map(|r| r.name()).collect(),
            estimates,
            stderrs,
            n_trajectories: self.n,
            n_failures,
            single_sample: single,
        }
    }
}

/// Momentum distribution by the Gaussian closed form of the damped Fourier
/// transform: rho(P) = sum_i w_i exp(-(P - P_i)^2 / 4a) / (n 2 sqrt(pi a)).
/// One unit-weight sample integrates to 1.
pub fn momentum_distribution(
    p_samples: &[f64],
    weights: &[f64],
    a: f64,
    grid: &[f64],
) -> Vec<f64> {
    assert_eq!(p_samples.len(), weights.len());
    assert!(a > 0.0, "damping must be positive");
    let n = p_samples.len().max(1) as f64;
    let norm = 1.0 / (n * 2.0 * (std::f64::consts::PI * a).sqrt());
    grid.iter()
        .map(|&p| {
            let mut acc = 0.0;
            for (&pi, &wi) in p_samples.iter().zip(weights.iter()) {
                let d = p - pi;
                acc += wi * (-d * d / (4.0 * a)).exp();
            }
            norm * acc
        })
        .collect()
}

/// Direct numerical evaluation of the damped Fourier integral the closed
/// form above transforms exactly: rho(P) = (1/2pi) Int ds exp(-a s^2)
/// <exp(isP_hat)> exp(-isP), with the expectation estimated from the same
/// weighted samples. Trapezoid quadrature on a symmetric s grid; used as a
/// test oracle for the closed form.
pub fn momentum_distribution_quadrature(
    p_samples: &[f64],
    weights: &[f64],
    a: f64,
    grid: &[f64],
    n_s: usize,
) -> Vec<f64> {
    assert!(a > 0.0 && n_s >= 3);
    let n = p_samples.len().max(1) as f64;
    // exp(-a s^2) below 1e-14 truncates the tail
    let s_max = (32.0f64 / a).sqrt();
    let ds = 2.0 * s_max / (n_s - 1) as f64;
    grid.iter()
        .map(|&p| {
            let mut acc = 0.0;
            for k in 0..n_s {
                let s = -s_max + k as f64 * ds;
                let damp = (-a * s * s).exp();
                let mut char_fn = 0.0;
                for (&pi, &wi) in p_samples.iter().zip(weights.iter()) {
                    char_fn += wi * (s * (pi - p)).cos();
                }
                let edge = if k == 0 || k == n_s - 1 { 0.5 } else { 1.0 };
                acc += edge * damp * char_fn / n;
            }
            acc * ds / (2.0 * std::f64::consts::PI)
        })
        .collect()
}

/// Scattering outcome table for 1-D models: per adiabatic state, the
/// transmitted (R > 0) and reflected (R < 0) probability, with Monte Carlo
/// errors and a count of trajectories still inside the interaction region.
#[derive(Debug, Clone)]
pub struct ChannelTable {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub n_trajectories: usize,
    pub still_interacting: usize,
}

impl ChannelTable {
    pub fn probability(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probabilities[i])
    }
}

/// Channel reduction over final states. `free_halfwidth` bounds the
/// interaction region: finals with |R| inside it are counted as warnings
/// (they still contribute to whichever side they sit on).
pub fn scattering_channels(
    model: &ModelDefinition,
    spec: &MethodSpec,
    finals: &[&TrajectoryState],
    free_halfwidth: f64,
    scratch: &mut Scratch,
) -> Result<ChannelTable> {
    if model.n != 1 {
        return Err(NafError::config("scattering channels need a 1-D model"));
    }
    let f = model.f;
    let mut labels = Vec::with_capacity(2 * f);
    for k in 0..f {
        labels.push(format!("trans{k}"));
        labels.push(format!("refl{k}"));
    }
    let mut sum = vec![0.0; 2 * f];
    let mut sumsq = vec![0.0; 2 * f];
    let mut still = 0;
    for state in finals {
        let rho = estimate_density(model, spec, state, Representation::Adiabatic, scratch)?;
        if state.r[0].abs() < free_halfwidth {
            still += 1;
        }
        let transmitted = state.r[0] > 0.0;
        for k in 0..f {
            let idx = 2 * k + usize::from(!transmitted);
            let v = state.w0 * rho[(k, k)].re;
            sum[idx] += v;
            sumsq[idx] += v * v;
        }
    }
    let n = finals.len().max(1) as f64;
    let single = finals.len() <= 1;
    let probabilities: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderrs: Vec<f64> = sum
        .iter()
        .zip(sumsq.iter())
        .map(|(&s, &sq)| {
            if single {
                0.0
            } else {
                let mean = s / n;
                (((sq / n - mean * mean) * n / (n - 1.0)).max(0.0) / n).sqrt()
            }
        })
        .collect();
    Ok(ChannelTable {
        labels,
        probabilities,
        stderrs,
        n_trajectories: finals.len(),
        still_interacting: still,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{initialize, MethodKind};
    use crate::models::catalog;
    use crate::sampling;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    #[test]
    fn weight_coefficients_match_hand_arithmetic() {
        // F = 2, gamma = (sqrt(3)-1)/2: diagonal coefficient 0.5, identity
        // coefficient equals gamma itself
        let f = 2.0;
        let gamma = (3.0f64.sqrt() - 1.0) / 2.0;
        let cd = (1.0 + f) / (2.0 * (1.0 + f * gamma).powi(2));
        let ci = (1.0 - gamma) / (1.0 + f * gamma);
        assert_relative_eq!(cd, 0.5, max_relative = 1e-14);
        assert_relative_eq!(ci, gamma, max_relative = 1e-14);
    }

    #[test]
    fn sphere_density_trace_is_one_exactly() {
        let model = catalog::tully_sac(15.0);
        let spec = MethodSpec::new(MethodKind::Naf, model.f);
        let mut scratch = Scratch::new(&model);
        for idx in 0..20 {
            let state = initialize(&model, &spec, 4, idx, &mut scratch).unwrap();
            for rep in [Representation::Adiabatic, Representation::Diabatic] {
                let rho = estimate_density(&model, &spec, &state, rep, &mut scratch).unwrap();
                let tr: Complex64 = (0..model.f).map(|k| rho[(k, k)]).sum();
                assert_abs_diff_eq!(tr.re, 1.0, epsilon = 1e-13);
                assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn density_is_hermitian_and_transforms_consistently() {
        let model = catalog::tully_dac(30.0);
        let spec = MethodSpec::new(MethodKind::Naf, model.f);
        let mut scratch = Scratch::new(&model);
        let state = initialize(&model, &spec, 9, 2, &mut scratch).unwrap();
        let rho_a =
            estimate_density(&model, &spec, &state, Representation::Adiabatic, &mut scratch)
                .unwrap();
        let rho_d =
            estimate_density(&model, &spec, &state, Representation::Diabatic, &mut scratch)
                .unwrap();
        for n in 0..model.f {
            for m in 0..model.f {
                let h = rho_a[(n, m)] - rho_a[(m, n)].conj();
                assert_abs_diff_eq!(h.norm(), 0.0, epsilon = 1e-13);
            }
        }
        // transform the adiabatic estimate by hand and compare both ways
        let t = to_complex(&state.frame.as_ref().unwrap().t);
        let back = &t * &rho_a * t.adjoint();
        for (x, y) in back.iter().zip(rho_d.iter()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-13);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-13);
        }
        let fwd = t.adjoint() * &rho_d * &t;
        for (x, y) in fwd.iter().zip(rho_a.iter()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-13);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-13);
        }
    }

    /// Time-zero identity: w0-weighted populations reproduce the delta
    /// initial condition within Monte Carlo error.
    #[test]
    fn weighted_populations_start_at_the_delta() {
        let f = 3;
        let jocc = 1;
        let gamma = sampling::gamma_default(f);
        let mut rng = sampling::trajectory_rng(31, 0);
        let n = 200_000;
        let mut pops = vec![0.0; f];
        let fd = f as f64;
        let cd = (1.0 + fd) / (2.0 * (1.0 + fd * gamma).powi(2));
        let ci = (1.0 - gamma) / (1.0 + fd * gamma);
        for _ in 0..n {
            let s = sampling::sample_cps(f, gamma, jocc, &mut rng);
            for k in 0..f {
                pops[k] += s.w0 * (cd * s.g[k].norm_sqr() - ci);
            }
        }
        for k in 0..f {
            pops[k] /= n as f64;
            let expect = if k == jocc { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(pops[k], expect, epsilon = 0.02);
        }
    }

    #[test]
    fn hopping_density_mixes_surface_and_amplitudes() {
        let model = catalog::tully_sac(16.0);
        let spec = MethodSpec::new(MethodKind::Fssh, model.f);
        let mut scratch = Scratch::new(&model);
        let state = initialize(&model, &spec, 3, 0, &mut scratch).unwrap();
        let rho = estimate_density(&model, &spec, &state, Representation::Adiabatic, &mut scratch)
            .unwrap();
        // diagonal is the surface indicator
        for k in 0..model.f {
            let expect = if k == state.active { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(rho[(k, k)].re, expect, epsilon = 1e-14);
        }
        // off-diagonal carries the amplitude coherence
        if let Payload::Amplitudes { c } = &state.payload {
            let expect = c[0] * c[1].conj();
            assert_abs_diff_eq!(rho[(0, 1)].re, expect.re, epsilon = 1e-14);
            assert_abs_diff_eq!(rho[(0, 1)].im, expect.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn accumulator_identical_trajectories_have_zero_error() {
        let times = vec![0.0, 1.0];
        let req = vec![ObservableRequest {
            kind: ObservableKind::Population { state: 0 },
            representation: Representation::Diabatic,
        }];
        let mut acc = Accumulator::new(times, req);
        for _ in 0..50 {
            acc.add_sample(0, &[Complex64::new(0.7, 0.0)], 1.0);
            acc.add_sample(1, &[Complex64::new(0.4, 0.0)], 1.0);
            acc.finish_trajectory();
        }
        let ts = acc.finalize(0);
        assert_abs_diff_eq!(ts.estimates[0][0], 0.7, epsilon = 1e-15);
        // identical samples: spread is pure cancellation noise
        assert_abs_diff_eq!(ts.stderrs[0][0], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(ts.stderrs[0][1], 0.0, epsilon = 1e-8);
        assert!(!ts.single_sample);
    }

    #[test]
    fn accumulator_merge_equals_single_pass() {
        let times = vec![0.0];
        let req = vec![ObservableRequest {
            kind: ObservableKind::Coherence { row: 0, col: 1 },
            representation: Representation::Diabatic,
        }];
        let mut rng = sampling::trajectory_rng(8, 8);
        let samples: Vec<(Complex64, f64)> = (0..64)
            .map(|_| {
                (
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                    0.5 + rng.random::<f64>(),
                )
            })
            .collect();
        let mut whole = Accumulator::new(times.clone(), req.clone());
        for (v, w) in &samples {
            whole.add_sample(0, &[*v], *w);
            whole.finish_trajectory();
        }
        let mut left = Accumulator::new(times.clone(), req.clone());
        let mut right = Accumulator::new(times, req);
        for (i, (v, w)) in samples.iter().enumerate() {
            let half = if i < 32 { &mut left } else { &mut right };
            half.add_sample(0, &[*v], *w);
            half.finish_trajectory();
        }
        left.merge(&right);
        let a = whole.finalize(0);
        let b = left.finalize(0);
        assert_abs_diff_eq!(a.estimates[0][0], b.estimates[0][0], epsilon = 1e-14);
        assert_abs_diff_eq!(a.stderrs[0][0], b.stderrs[0][0], epsilon = 1e-14);
    }

    #[test]
    fn single_sample_flags_undefined_error() {
        let times = vec![0.0];
        let req = vec![ObservableRequest {
            kind: ObservableKind::MeanR { dof: 0 },
            representation: Representation::Diabatic,
        }];
        let mut acc = Accumulator::new(times, req);
        acc.add_sample(0, &[Complex64::new(2.5, 0.0)], 1.0);
        acc.finish_trajectory();
        let ts = acc.finalize(0);
        assert!(ts.single_sample);
        assert_eq!(ts.stderrs[0][0], 0.0);
        assert_abs_diff_eq!(ts.estimates[0][0], 2.5, epsilon = 1e-15);
    }

    /// Standard errors must fall like 1/sqrt(n): slope of log(err) against
    /// log(n) close to -1/2.
    #[test]
    fn standard_error_shrinks_as_root_n() {
        let req = vec![ObservableRequest {
            kind: ObservableKind::Population { state: 0 },
            representation: Representation::Diabatic,
        }];
        let mut rng = sampling::trajectory_rng(12, 0);
        let err_at = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut acc = Accumulator::new(vec![0.0], req.clone());
            for _ in 0..n {
                let x = Complex64::new(rng.random::<f64>(), 0.0);
                let w = 0.5 + rng.random::<f64>();
                acc.add_sample(0, &[x], w);
                acc.finish_trajectory();
            }
            acc.finalize(0).stderrs[0][0]
        };
        let e3 = err_at(1_000, &mut rng);
        let e4 = err_at(10_000, &mut rng);
        let e5 = err_at(100_000, &mut rng);
        let slope1 = (e4 / e3).ln() / 10f64.ln();
        let slope2 = (e5 / e4).ln() / 10f64.ln();
        assert!((slope1 + 0.5).abs() < 0.1, "slope {slope1}");
        assert!((slope2 + 0.5).abs() < 0.1, "slope {slope2}");
    }

    #[test]
    fn single_gaussian_integrates_to_one() {
        let a = 0.05;
        let p0 = 12.0;
        let grid: Vec<f64> = (0..4001).map(|i| p0 - 10.0 + 0.005 * i as f64).collect();
        let rho = momentum_distribution(&[p0], &[1.0], a, &grid);
        // trapezoid integral
        let mut integral = 0.0;
        for i in 1..grid.len() {
            integral += 0.5 * (rho[i] + rho[i - 1]) * (grid[i] - grid[i - 1]);
        }
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-6);
        // peak value of a variance-2a Gaussian
        let peak = rho.iter().cloned().fold(0.0f64, f64::max);
        assert_relative_eq!(
            peak,
            1.0 / (2.0 * (std::f64::consts::PI * a).sqrt()),
            max_relative = 1e-10
        );
    }

    #[test]
    fn closed_form_matches_fourier_quadrature() {
        let mut rng = sampling::trajectory_rng(77, 1);
        let samples: Vec<f64> = (0..40).map(|_| 8.0 + 8.0 * rng.random::<f64>()).collect();
        let weights: Vec<f64> = (0..40).map(|_| 0.2 + 1.6 * rng.random::<f64>()).collect();
        let a = 0.01;
        let grid: Vec<f64> = (0..61).map(|i| 6.0 + 0.2 * i as f64).collect();
        let closed = momentum_distribution(&samples, &weights, a, &grid);
        let quad = momentum_distribution_quadrature(&samples, &weights, a, &grid, 20001);
        for (c, q) in closed.iter().zip(quad.iter()) {
            assert_abs_diff_eq!(c, q, epsilon = 1e-6);
        }
    }

    #[test]
    fn channels_sum_to_one_for_unit_weight_methods() {
        let model = catalog::tully_sac(25.0);
        let spec = MethodSpec::new(MethodKind::Fssh, model.f);
        let mut scratch = Scratch::new(&model);
        let mut finals = Vec::new();
        for idx in 0..30 {
            let mut state = initialize(&model, &spec, 6, idx, &mut scratch).unwrap();
            // park the trajectory on either side without propagating
            state.r[0] = if idx % 3 == 0 { -7.0 } else { 9.0 };
            finals.push(state);
        }
        let refs: Vec<&TrajectoryState> = finals.iter().collect();
        let table = scattering_channels(&model, &spec, &refs, 5.0, &mut scratch).unwrap();
        let total: f64 = table.probabilities.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
        assert_eq!(table.still_interacting, 0);
    }

    #[test]
    fn channel_warning_counts_unfinished_trajectories() {
        let model = catalog::tully_sac(25.0);
        let spec = MethodSpec::new(MethodKind::Fssh, model.f);
        let mut scratch = Scratch::new(&model);
        let mut state = initialize(&model, &spec, 6, 0, &mut scratch).unwrap();
        state.r[0] = 0.3;
        let finals = vec![&state];
        let table = scattering_channels(&model, &spec, &finals, 5.0, &mut scratch).unwrap();
        assert_eq!(table.still_interacting, 1);
    }

    #[test]
    fn observable_names_and_validation() {
        let model = catalog::tully_sac(10.0);
        let ok = ObservableRequest {
            kind: ObservableKind::Population { state: 1 },
            representation: Representation::Adiabatic,
        };
        assert_eq!(ok.name(), "pop1_adi");
        assert!(ok.validate(&model).is_ok());
        let bad = ObservableRequest {
            kind: ObservableKind::Population { state: 7 },
            representation: Representation::Adiabatic,
        };
        assert!(bad.validate(&model).is_err());
        let self_coh = ObservableRequest {
            kind: ObservableKind::Coherence { row: 1, col: 1 },
            representation: Representation::Diabatic,
        };
        assert!(self_coh.validate(&model).is_err());
    }

    #[test]
    fn weight0_formula_and_mean() {
        let f = 2;
        let gamma = sampling::gamma_default(f);
        // fully occupied jocc: |g|^2/2 = 1 + F gamma - (F-1) gamma ... on the
        // sphere with everything on jocc, |g_jocc|^2/2 = 1 + F gamma - (F-1)*gamma
        // is not forced; test the direct formula instead
        let mut g = DVector::from_element(f, Complex64::new(0.0, 0.0));
        g[0] = Complex64::new((2.0 * (1.0 + f as f64 * gamma)).sqrt(), 0.0);
        let w = electronic_weight0(&g, 0, gamma);
        assert_relative_eq!(
            w,
            f as f64 * (1.0 + f as f64 * gamma - gamma),
            max_relative = 1e-14
        );
    }
}
