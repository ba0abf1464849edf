//! Split-operator propagation of the full 1-D time-dependent Schroedinger
//! equation on a uniform grid: half potential step per point, full kinetic
//! step in momentum space, half potential step. Second order in dt, exactly
//! unitary up to roundoff.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::linalg::sym_eigen;
use crate::models::{ModelDefinition, NuclearInit, Representation};
use crate::{NafError, Result};

/// Multi-state wavefunction sampled on a uniform coordinate grid, stored as
/// diabatic components `psi[state][point]`.
#[derive(Debug, Clone)]
pub struct GridWavefunction {
    pub r_min: f64,
    pub dr: f64,
    pub mass: f64,
    pub psi: Vec<Vec<Complex64>>,
}

impl GridWavefunction {
    pub fn n_states(&self) -> usize {
        self.psi.len()
    }

    pub fn n_points(&self) -> usize {
        self.psi[0].len()
    }

    pub fn r(&self, j: usize) -> f64 {
        self.r_min + j as f64 * self.dr
    }

    pub fn norm(&self) -> f64 {
        let density: f64 =
            self.psi.iter().map(|row| row.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum();
        (density * self.dr).sqrt()
    }

    fn scale(&mut self, s: f64) {
        for row in &mut self.psi {
            for c in row.iter_mut() {
                *c *= s;
            }
        }
    }

    /// Gaussian packet matching the model's initial conditions, placed on
    /// the occupied state in the declared representation. Gaussian initial
    /// conditions are required; point initial conditions have no width to
    /// discretize.
    pub fn gaussian_packet(
        model: &ModelDefinition,
        r_min: f64,
        r_max: f64,
        n_points: usize,
    ) -> Result<Self> {
        if !model.is_1d() {
            return Err(NafError::config("grid propagation is limited to 1-D models"));
        }
        let (r0, p0, var_r) = match &model.init.nuclear {
            NuclearInit::Gaussian { r0, p0, var_r, .. } => (r0[0], p0[0], var_r[0]),
            NuclearInit::Point { .. } => {
                return Err(NafError::config(
                    "grid packet needs Gaussian initial conditions, got a point",
                ));
            }
        };
        let f = model.f;
        let dr = (r_max - r_min) / (n_points - 1) as f64;
        let mut psi = vec![vec![Complex64::new(0.0, 0.0); n_points]; f];
        let jocc = model.init.occupation;
        // per-point adiabatic columns, sign-aligned along the grid so the
        // projected packet stays smooth
        let mut v = DMatrix::zeros(f, f);
        let mut t_prev: Option<DMatrix<f64>> = None;
        let mut rvec = DVector::zeros(1);
        for j in 0..n_points {
            let r = r_min + j as f64 * dr;
            let envelope = (-(r - r0).powi(2) / (4.0 * var_r)).exp();
            let phase = Complex64::new(0.0, p0 * (r - r0)).exp();
            let amp = envelope * phase;
            match model.init.occupation_rep {
                Representation::Diabatic => psi[jocc][j] = amp,
                Representation::Adiabatic => {
                    rvec[0] = r;
                    model.potential(&rvec, &mut v);
                    let (_, mut t) = sym_eigen(&v)?;
                    if let Some(prev) = &t_prev {
                        for k in 0..f {
                            let overlap: f64 =
                                (0..f).map(|n| prev[(n, k)] * t[(n, k)]).sum();
                            if overlap < 0.0 {
                                for n in 0..f {
                                    t[(n, k)] = -t[(n, k)];
                                }
                            }
                        }
                    }
                    for n in 0..f {
                        psi[n][j] = amp * t[(n, jocc)];
                    }
                    t_prev = Some(t);
                }
            }
        }
        let mut wf = GridWavefunction { r_min, dr, mass: model.masses[0], psi };
        let norm = wf.norm();
        if norm < 1e-12 {
            return Err(NafError::config("initial packet has no support on the grid"));
        }
        wf.scale(1.0 / norm);
        Ok(wf)
    }

    /// Packet on the grid suggested by the model itself.
    pub fn from_model_hint(model: &ModelDefinition) -> Result<Self> {
        let hint = model.grid_hint.as_ref().ok_or_else(|| {
            NafError::config(format!("model {} declares no reference grid", model.label))
        })?;
        Self::gaussian_packet(model, hint.r_min, hint.r_max, hint.n_points)
    }
}

/// Bulk observables of a grid wavefunction at one instant.
#[derive(Debug, Clone)]
pub struct GridObservables {
    pub norm: f64,
    pub populations_diabatic: Vec<f64>,
    pub populations_adiabatic: Vec<f64>,
    pub mean_r: f64,
    pub mean_p: f64,
    pub energy: f64,
}

/// Precomputed split-operator machinery for one model, grid and time step.
pub struct GridPropagator {
    dt: f64,
    dr: f64,
    r_min: f64,
    mass: f64,
    f: usize,
    m: usize,
    /// exp(-i V(R_j) dt / 2) per grid point
    v_half: Vec<DMatrix<Complex64>>,
    /// aligned adiabatic columns per grid point (observables, channels)
    t_grid: Vec<DMatrix<f64>>,
    /// adiabatic energies per grid point
    e_grid: Vec<DVector<f64>>,
    /// FFT wavenumber per bin (natural DFT ordering)
    k: Vec<f64>,
    /// exp(-i k^2 dt / 2m) per bin
    kinetic_phase: Vec<Complex64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    /// norm fraction tolerated in the outermost grid band before aborting
    edge_points: usize,
    work: Vec<Complex64>,
}

impl GridPropagator {
    pub fn new(model: &ModelDefinition, wf: &GridWavefunction, dt: f64) -> Result<Self> {
        if !model.is_1d() {
            return Err(NafError::config("grid propagation is limited to 1-D models"));
        }
        let f = model.f;
        let m = wf.n_points();
        let mut v = DMatrix::zeros(f, f);
        let mut rvec = DVector::zeros(1);
        let mut v_half = Vec::with_capacity(m);
        let mut t_grid = Vec::with_capacity(m);
        let mut e_grid = Vec::with_capacity(m);
        let mut t_prev: Option<DMatrix<f64>> = None;
        for j in 0..m {
            rvec[0] = wf.r(j);
            model.potential(&rvec, &mut v);
            let (e, mut t) = sym_eigen(&v)?;
            if let Some(prev) = &t_prev {
                for kcol in 0..f {
                    let overlap: f64 = (0..f).map(|n| prev[(n, kcol)] * t[(n, kcol)]).sum();
                    if overlap < 0.0 {
                        for n in 0..f {
                            t[(n, kcol)] = -t[(n, kcol)];
                        }
                    }
                }
            }
            let mut u = DMatrix::from_element(f, f, Complex64::new(0.0, 0.0));
            for a in 0..f {
                for b in 0..f {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for kcol in 0..f {
                        let phase = Complex64::new(0.0, -e[kcol] * dt / 2.0).exp();
                        acc += t[(a, kcol)] * phase * t[(b, kcol)];
                    }
                    u[(a, b)] = acc;
                }
            }
            v_half.push(u);
            t_prev = Some(t.clone());
            t_grid.push(t);
            e_grid.push(e);
        }
        let dk = 2.0 * std::f64::consts::PI / (m as f64 * wf.dr);
        let mut k = Vec::with_capacity(m);
        let mut kinetic_phase = Vec::with_capacity(m);
        for j in 0..m {
            let idx = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
            let kj = idx * dk;
            k.push(kj);
            kinetic_phase.push(Complex64::new(0.0, -kj * kj * dt / (2.0 * wf.mass)).exp());
        }
        let mut planner = FftPlanner::new();
        Ok(GridPropagator {
            dt,
            dr: wf.dr,
            r_min: wf.r_min,
            mass: wf.mass,
            f,
            m,
            v_half,
            t_grid,
            e_grid,
            k,
            kinetic_phase,
            fft_fwd: planner.plan_fft_forward(m),
            fft_inv: planner.plan_fft_inverse(m),
            edge_points: (m / 100).max(4),
            work: vec![Complex64::new(0.0, 0.0); m],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn apply_v_half(&mut self, wf: &mut GridWavefunction) {
        let f = self.f;
        for j in 0..self.m {
            let u = &self.v_half[j];
            match f {
                1 => wf.psi[0][j] *= u[(0, 0)],
                2 => {
                    let a = wf.psi[0][j];
                    let b = wf.psi[1][j];
                    wf.psi[0][j] = u[(0, 0)] * a + u[(0, 1)] * b;
                    wf.psi[1][j] = u[(1, 0)] * a + u[(1, 1)] * b;
                }
                _ => {
                    for n in 0..f {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for mm in 0..f {
                            acc += u[(n, mm)] * wf.psi[mm][j];
                        }
                        self.work[n] = acc;
                    }
                    for n in 0..f {
                        wf.psi[n][j] = self.work[n];
                    }
                }
            }
        }
    }

    /// One split-operator step. Errors if the packet has reached the grid
    /// boundary (the periodic kinetic step would wrap it around).
    pub fn step(&mut self, wf: &mut GridWavefunction) -> Result<()> {
        self.apply_v_half(wf);
        let scale = 1.0 / self.m as f64;
        for n in 0..self.f {
            self.fft_fwd.process(&mut wf.psi[n]);
            for (c, ph) in wf.psi[n].iter_mut().zip(self.kinetic_phase.iter()) {
                *c *= ph;
            }
            self.fft_inv.process(&mut wf.psi[n]);
            for c in wf.psi[n].iter_mut() {
                *c *= scale;
            }
        }
        self.apply_v_half(wf);
        let leak = self.edge_norm(wf);
        if leak > 1e-6 {
            return Err(NafError::numerical(format!(
                "wavepacket reached the grid boundary (norm {leak:.3e} in the outer band); \
                 enlarge the grid extent"
            )));
        }
        Ok(())
    }

    pub fn propagate(&mut self, wf: &mut GridWavefunction, n_steps: usize) -> Result<()> {
        for _ in 0..n_steps {
            self.step(wf)?;
        }
        Ok(())
    }

    fn edge_norm(&self, wf: &GridWavefunction) -> f64 {
        let mut acc = 0.0;
        for n in 0..self.f {
            for j in 0..self.edge_points {
                acc += wf.psi[n][j].norm_sqr();
                acc += wf.psi[n][self.m - 1 - j].norm_sqr();
            }
        }
        acc * self.dr
    }

    pub fn observables(&mut self, wf: &GridWavefunction) -> GridObservables {
        let f = self.f;
        let m = self.m;
        let dr = self.dr;
        let mut pop_d = vec![0.0; f];
        let mut pop_a = vec![0.0; f];
        let mut mean_r = 0.0;
        let mut potential = 0.0;
        for j in 0..m {
            let r = self.r_min + j as f64 * dr;
            let t = &self.t_grid[j];
            let e = &self.e_grid[j];
            for n in 0..f {
                let dens = wf.psi[n][j].norm_sqr();
                pop_d[n] += dens;
                mean_r += r * dens;
            }
            for kstate in 0..f {
                let mut amp = Complex64::new(0.0, 0.0);
                for n in 0..f {
                    amp += t[(n, kstate)] * wf.psi[n][j];
                }
                let dens = amp.norm_sqr();
                pop_a[kstate] += dens;
                potential += e[kstate] * dens;
            }
        }
        let norm2: f64 = pop_d.iter().sum::<f64>() * dr;
        for v in pop_d.iter_mut() {
            *v = *v * dr / norm2;
        }
        for v in pop_a.iter_mut() {
            *v = *v * dr / norm2;
        }
        mean_r = mean_r * dr / norm2;
        potential = potential * dr / norm2;
        // momentum-space pieces: <P> and <T>
        let mut mean_p = 0.0;
        let mut kinetic = 0.0;
        let mut khat_norm2 = 0.0;
        for n in 0..f {
            self.work.copy_from_slice(&wf.psi[n]);
            self.fft_fwd.process(&mut self.work);
            for (j, c) in self.work.iter().enumerate() {
                let w = c.norm_sqr();
                mean_p += self.k[j] * w;
                kinetic += self.k[j] * self.k[j] / (2.0 * self.mass) * w;
                khat_norm2 += w;
            }
        }
        mean_p /= khat_norm2;
        kinetic /= khat_norm2;
        GridObservables {
            norm: norm2.sqrt(),
            populations_diabatic: pop_d,
            populations_adiabatic: pop_a,
            mean_r,
            mean_p,
            energy: kinetic + potential,
        }
    }

    /// Reduced electronic density matrix, traced over the coordinate:
    /// rho_nm = integral psi_n(r) psi_m(r)* dr, normalized to unit trace.
    pub fn reduced_density(
        &self,
        wf: &GridWavefunction,
        rep: Representation,
    ) -> DMatrix<Complex64> {
        let f = self.f;
        let mut rho = DMatrix::from_element(f, f, Complex64::new(0.0, 0.0));
        let mut amp = vec![Complex64::new(0.0, 0.0); f];
        for j in 0..self.m {
            match rep {
                Representation::Diabatic => {
                    for (n, a) in amp.iter_mut().enumerate() {
                        *a = wf.psi[n][j];
                    }
                }
                Representation::Adiabatic => {
                    let t = &self.t_grid[j];
                    for (kstate, a) in amp.iter_mut().enumerate() {
                        *a = (0..f).map(|n| t[(n, kstate)] * wf.psi[n][j]).sum();
                    }
                }
            }
            for n in 0..f {
                for m2 in 0..f {
                    rho[(n, m2)] += amp[n] * amp[m2].conj();
                }
            }
        }
        let trace: f64 = (0..f).map(|n| rho[(n, n)].re).sum();
        rho / Complex64::new(trace, 0.0)
    }

    /// Momentum distribution rho(P) on a caller-supplied grid, summed over
    /// states: the squared momentum wavefunction, optionally convolved with
    /// a variance-2a Gaussian to match the trajectory-side damped estimate.
    pub fn momentum_distribution(
        &mut self,
        wf: &GridWavefunction,
        damping: Option<f64>,
        grid: &[f64],
    ) -> Vec<f64> {
        // spectral weights: |psi_hat(k_j)|^2 dr^2 / 2pi integrates to the
        // squared norm against dk
        let mut weights = vec![0.0; self.m];
        for n in 0..self.f {
            self.work.copy_from_slice(&wf.psi[n]);
            self.fft_fwd.process(&mut self.work);
            for (j, c) in self.work.iter().enumerate() {
                weights[j] += c.norm_sqr();
            }
        }
        let spectral = self.dr * self.dr / (2.0 * std::f64::consts::PI);
        for w in weights.iter_mut() {
            *w *= spectral;
        }
        let dk = 2.0 * std::f64::consts::PI / (self.m as f64 * self.dr);
        match damping {
            Some(a) => {
                assert!(a > 0.0, "damping must be positive");
                let norm = 1.0 / (2.0 * (std::f64::consts::PI * a).sqrt());
                grid.iter()
                    .map(|&p| {
                        let mut acc = 0.0;
                        for j in 0..self.m {
                            let d = p - self.k[j];
                            acc += weights[j] * (-d * d / (4.0 * a)).exp();
                        }
                        acc * dk * norm
                    })
                    .collect()
            }
            None => {
                // nearest-bin linear interpolation on the sorted spectrum
                let mut order: Vec<usize> = (0..self.m).collect();
                order.sort_by(|&a, &b| self.k[a].partial_cmp(&self.k[b]).unwrap());
                let ks: Vec<f64> = order.iter().map(|&j| self.k[j]).collect();
                let ws: Vec<f64> = order.iter().map(|&j| weights[j]).collect();
                grid.iter()
                    .map(|&p| {
                        if p <= ks[0] || p >= ks[self.m - 1] {
                            return 0.0;
                        }
                        let hi = ks.partition_point(|&x| x < p);
                        let lo = hi - 1;
                        let frac = (p - ks[lo]) / (ks[hi] - ks[lo]);
                        ws[lo] + frac * (ws[hi] - ws[lo])
                    })
                    .collect()
            }
        }
    }

    /// Transmission (R > 0) and reflection (R < 0) per adiabatic state,
    /// labeled like the trajectory-side channel table.
    pub fn channels(&mut self, wf: &GridWavefunction) -> (Vec<String>, Vec<f64>) {
        let f = self.f;
        let mut labels = Vec::with_capacity(2 * f);
        for kstate in 0..f {
            labels.push(format!("trans{kstate}"));
            labels.push(format!("refl{kstate}"));
        }
        let mut probs = vec![0.0; 2 * f];
        let mut norm2 = 0.0;
        for j in 0..self.m {
            let r = self.r_min + j as f64 * self.dr;
            let t = &self.t_grid[j];
            for kstate in 0..f {
                let mut amp = Complex64::new(0.0, 0.0);
                for n in 0..f {
                    amp += t[(n, kstate)] * wf.psi[n][j];
                }
                let dens = amp.norm_sqr();
                norm2 += dens;
                let idx = 2 * kstate + usize::from(r <= 0.0);
                probs[idx] += dens;
            }
        }
        for p in probs.iter_mut() {
            *p /= norm2;
        }
        (labels, probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::catalog;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn hand_gaussian(
        r_min: f64,
        r_max: f64,
        n_points: usize,
        mass: f64,
        r0: f64,
        p0: f64,
        var_r: f64,
    ) -> GridWavefunction {
        let dr = (r_max - r_min) / (n_points - 1) as f64;
        let mut psi = vec![vec![Complex64::new(0.0, 0.0); n_points]];
        for j in 0..n_points {
            let r = r_min + j as f64 * dr;
            let env = (-(r - r0).powi(2) / (4.0 * var_r)).exp();
            psi[0][j] = env * Complex64::new(0.0, p0 * (r - r0)).exp();
        }
        let mut wf = GridWavefunction { r_min, dr, mass, psi };
        let n = wf.norm();
        wf.scale(1.0 / n);
        wf
    }

    fn coordinate_variance(wf: &GridWavefunction) -> f64 {
        let mut mean = 0.0;
        let mut mean2 = 0.0;
        let mut norm2 = 0.0;
        for n in 0..wf.n_states() {
            for j in 0..wf.n_points() {
                let r = wf.r(j);
                let d = wf.psi[n][j].norm_sqr();
                mean += r * d;
                mean2 += r * r * d;
                norm2 += d;
            }
        }
        mean /= norm2;
        mean2 /= norm2;
        mean2 - mean * mean
    }

    /// Free-particle dispersion: sigma^2(t) = sigma^2(0) + t^2 / (4 m^2 sigma^2(0)).
    #[test]
    fn free_packet_dispersion_matches_closed_form() {
        let model = catalog::constant_v(DMatrix::zeros(1, 1), 0);
        let mass = 1.0;
        let var0 = 1.0;
        let mut wf = hand_gaussian(-80.0, 80.0, 1024, mass, 0.0, 0.0, var0);
        let dt = 0.01;
        let mut prop = GridPropagator::new(&model, &wf, dt).unwrap();
        let n_steps = 400;
        prop.propagate(&mut wf, n_steps).unwrap();
        let t = dt * n_steps as f64;
        let expect = var0 + t * t / (4.0 * mass * mass * var0);
        assert_relative_eq!(coordinate_variance(&wf), expect, max_relative = 1e-8);
        assert_abs_diff_eq!(wf.norm(), 1.0, epsilon = 1e-10);
    }

    /// Single harmonic surface: mean energy flat to 1e-8 relative over 1e5 steps.
    #[test]
    fn harmonic_energy_conserved_over_long_run() {
        let mass = 2000.0;
        let omega = 0.005;
        let model = catalog::harmonic_diag(vec![0.0], omega, mass, 0.0, 0.0);
        // displaced coherent packet
        let var0 = 1.0 / (2.0 * mass * omega);
        let mut wf = hand_gaussian(-2.5, 3.0, 256, mass, 0.5, 0.0, var0);
        let dt = 0.02;
        let mut prop = GridPropagator::new(&model, &wf, dt).unwrap();
        let e0 = prop.observables(&wf).energy;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            prop.propagate(&mut wf, 1000).unwrap();
            let e = prop.observables(&wf).energy;
            worst = worst.max(((e - e0) / e0).abs());
        }
        assert!(worst < 1e-8, "relative energy drift {worst:.3e}");
        assert_abs_diff_eq!(wf.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn packet_reaching_the_boundary_is_an_extent_error() {
        let model = catalog::constant_v(DMatrix::zeros(1, 1), 0);
        let mut wf = hand_gaussian(-10.0, 10.0, 256, 1.0, 0.0, 5.0, 1.0);
        let mut prop = GridPropagator::new(&model, &wf, 0.05).unwrap();
        let mut hit = false;
        for _ in 0..2000 {
            if prop.step(&mut wf).is_err() {
                hit = true;
                break;
            }
        }
        assert!(hit, "fast packet never tripped the edge monitor");
    }

    #[test]
    fn adiabatic_packet_starts_on_the_ground_state() {
        let model = catalog::tully_ecr(20.0);
        let wf = GridWavefunction::from_model_hint(&model).unwrap();
        let mut prop = GridPropagator::new(&model, &wf, 1.0).unwrap();
        let obs = prop.observables(&wf);
        assert_abs_diff_eq!(obs.norm, 1.0, epsilon = 1e-10);
        assert!(obs.populations_adiabatic[0] > 0.9999);
        assert_abs_diff_eq!(obs.mean_r, -13.0, epsilon = 0.01);
        assert_abs_diff_eq!(obs.mean_p, 20.0, epsilon = 0.01);
    }

    /// Momentum spectrum of a free Gaussian: variance var_p around p0, unit
    /// integral, and the smoothed estimate widens by exactly 2a.
    #[test]
    fn momentum_distribution_of_gaussian_packet() {
        let model = catalog::constant_v(DMatrix::zeros(1, 1), 0);
        let var_r = 0.5;
        let p0 = 12.0;
        let wf = hand_gaussian(-50.0, 50.0, 2048, 2000.0, 0.0, p0, var_r);
        let mut prop = GridPropagator::new(&model, &wf, 0.1).unwrap();
        let grid: Vec<f64> = (0..2001).map(|i| 6.0 + 0.006 * i as f64).collect();
        let a = 0.05;
        let rho = prop.momentum_distribution(&wf, Some(a), &grid);
        let mut integral = 0.0;
        let mut mean = 0.0;
        let mut mean2 = 0.0;
        for i in 1..grid.len() {
            let h = grid[i] - grid[i - 1];
            integral += 0.5 * (rho[i] + rho[i - 1]) * h;
            mean += 0.5 * (rho[i] * grid[i] + rho[i - 1] * grid[i - 1]) * h;
            mean2 += 0.5 * (rho[i] * grid[i] * grid[i] + rho[i - 1] * grid[i - 1] * grid[i - 1]) * h;
        }
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-6);
        mean /= integral;
        mean2 /= integral;
        assert_abs_diff_eq!(mean, p0, epsilon = 1e-6);
        // packet momentum variance 1/(4 var_r) plus kernel variance 2a
        let expect = 0.25 / var_r + 2.0 * a;
        assert_relative_eq!(mean2 - mean * mean, expect, max_relative = 1e-4);
        // both variants against the closed-form spectra: the bare packet is
        // momentum-Gaussian with variance var_p, the smoothed one widens by
        // exactly 2a
        let var_p = 0.25 / var_r;
        let sharp = prop.momentum_distribution(&wf, None, &grid);
        for (i, s) in sharp.iter().enumerate() {
            let d = grid[i] - p0;
            let exact = (-d * d / (2.0 * var_p)).exp()
                / (2.0 * std::f64::consts::PI * var_p).sqrt();
            assert_abs_diff_eq!(s, &exact, epsilon = 2e-3);
        }
        for (i, s) in rho.iter().enumerate() {
            let v = var_p + 2.0 * a;
            let d = grid[i] - p0;
            let exact =
                (-d * d / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
            assert_abs_diff_eq!(s, &exact, epsilon = 1e-3);
        }
    }

    /// Channel probabilities self-converge under grid doubling and step
    /// halving.
    #[test]
    fn sac_channels_self_converge() {
        let run = |n_points: usize, dt: f64| -> Vec<f64> {
            let model = catalog::tully_sac(20.0);
            let mut wf =
                GridWavefunction::gaussian_packet(&model, -40.0, 40.0, n_points).unwrap();
            let mut prop = GridPropagator::new(&model, &wf, dt).unwrap();
            let n_steps = (2200.0 / dt).round() as usize;
            prop.propagate(&mut wf, n_steps).unwrap();
            prop.channels(&wf).1
        };
        let base = run(4096, 2.0);
        let finer_grid = run(8192, 2.0);
        let finer_dt = run(4096, 1.0);
        for (a, b) in base.iter().zip(finer_grid.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-3);
        }
        for (a, b) in base.iter().zip(finer_dt.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-3);
        }
        // the packet has committed: population sits in the open channels
        let total: f64 = base.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        assert!(base[0] > 0.5, "lower transmission should dominate at P0 = 20");
    }
}
