//! Trajectory-ensemble execution. Trajectories are independent: each gets its
//! own counter-based random stream keyed by (seed, index), so the ensemble
//! decomposes into fixed batches that any number of workers may execute.
//! Partial sums are merged in batch order, which keeps the reduction
//! bit-identical no matter how work was scheduled.

use std::ops::Range;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{Engine, RunSpec};
use super::{MomentumSeries, RunReport};
use crate::dynamics::{advance, initialize, MethodSpec, Scratch, TrajectoryState};
use crate::estimators::{self, Accumulator};
use crate::{NafError, Result};

/// Trajectories per work unit. Large enough to amortize scratch allocation,
/// small enough to spread hundreds of units over any sane worker count.
const BATCH: usize = 256;

struct BatchOut {
    acc: Accumulator,
    failures: usize,
    first_error: Option<(u64, String)>,
    finals: Vec<TrajectoryState>,
}

fn run_one(
    spec: &RunSpec,
    method: &MethodSpec,
    index: u64,
    scratch: &mut Scratch,
    staged: &mut [Complex64],
    n_slots: usize,
) -> Result<TrajectoryState> {
    let model = &spec.model;
    let nr = spec.requests.len();
    let mut state = initialize(model, method, spec.seed, index, scratch)?;
    estimators::observe(model, method, &state, &spec.requests, scratch, &mut staged[..nr])?;
    let mut slot = 1;
    for step in 1..=spec.n_steps() {
        advance(model, method, &mut state, spec.dt, scratch)?;
        if step % spec.record_every == 0 {
            estimators::observe(
                model,
                method,
                &state,
                &spec.requests,
                scratch,
                &mut staged[slot * nr..(slot + 1) * nr],
            )?;
            slot += 1;
        }
    }
    debug_assert_eq!(slot, n_slots);
    Ok(state)
}

fn run_batch(
    spec: &RunSpec,
    method: &MethodSpec,
    range: Range<usize>,
    times: &[f64],
    keep_finals: bool,
) -> BatchOut {
    let nr = spec.requests.len();
    let nt = times.len();
    let mut scratch = Scratch::new(&spec.model);
    let mut acc = Accumulator::new(times.to_vec(), spec.requests.clone());
    // Observables are staged per trajectory and only committed on success, so
    // a failure never leaves a half-recorded trajectory in the sums.
    let mut staged = vec![Complex64::new(0.0, 0.0); nr * nt];
    let mut failures = 0;
    let mut first_error = None;
    let mut finals = Vec::new();
    for index in range {
        match run_one(spec, method, index as u64, &mut scratch, &mut staged, nt) {
            Ok(state) => {
                let w0 = state.w0;
                for slot in 0..nt {
                    acc.add_sample(slot, &staged[slot * nr..(slot + 1) * nr], w0);
                }
                acc.finish_trajectory();
                if keep_finals {
                    finals.push(state);
                }
            }
            Err(e) => {
                failures += 1;
                if first_error.is_none() {
                    first_error = Some((index as u64, e.to_string()));
                }
            }
        }
    }
    BatchOut { acc, failures, first_error, finals }
}

/// Run the ensemble with an explicit worker count (`None` = rayon's default
/// pool). The result does not depend on the worker count.
pub fn run_ensemble_with_workers(spec: &RunSpec, workers: Option<usize>) -> Result<RunReport> {
    let method = match &spec.engine {
        Engine::Trajectory(m) => m,
        Engine::ExactGrid => {
            return Err(NafError::config(
                "run_ensemble needs a trajectory method; use run_exact_grid for exact_grid",
            ));
        }
    };
    let start = Instant::now();
    let times = spec.record_times();
    let keep_finals = spec.scattering.is_some() || spec.momentum.is_some();
    let n = spec.n_traj;
    let n_batches = n.div_ceil(BATCH);

    let run_all = || -> Vec<BatchOut> {
        (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let lo = b * BATCH;
                let hi = ((b + 1) * BATCH).min(n);
                run_batch(spec, method, lo..hi, &times, keep_finals)
            })
            .collect()
    };
    let batches = match workers {
        Some(0) => return Err(NafError::config("worker count must be at least 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| NafError::config(format!("worker pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    let mut acc = Accumulator::new(times, spec.requests.clone());
    let mut failures = 0;
    let mut first_error: Option<(u64, String)> = None;
    let mut finals = Vec::new();
    for out in batches {
        acc.merge(&out.acc);
        failures += out.failures;
        if first_error.is_none() {
            first_error = out.first_error;
        }
        finals.extend(out.finals);
    }

    let failure_fraction = failures as f64 / n as f64;
    if failure_fraction >= 0.05 {
        let first = first_error
            .map(|(i, m)| {
                format!("{} on {}, trajectory {i}: {m}", spec.method_name, spec.model.label)
            })
            .unwrap_or_default();
        return Err(NafError::EnsembleAborted { failed: failures, total: n, first });
    }

    let series = acc.finalize(failures);
    let mut scratch = Scratch::new(&spec.model);
    let channels = match &spec.scattering {
        Some(s) => {
            let refs: Vec<&TrajectoryState> = finals.iter().collect();
            Some(estimators::scattering_channels(
                &spec.model,
                method,
                &refs,
                s.free_halfwidth,
                &mut scratch,
            )?)
        }
        None => None,
    };
    let momentum = spec.momentum.as_ref().map(|mspec| {
        let ps: Vec<f64> = finals.iter().map(|s| s.p[0]).collect();
        let ws: Vec<f64> = finals.iter().map(|s| s.w0).collect();
        let density = estimators::momentum_distribution(&ps, &ws, mspec.damping, &mspec.grid);
        MomentumSeries { p: mspec.grid.clone(), density }
    });

    Ok(RunReport {
        series,
        channels,
        momentum,
        n_trajectories: n,
        n_failures: failures,
        failure_fraction,
        wall_seconds: start.elapsed().as_secs_f64(),
        seed: spec.seed,
        method_name: spec.method_name.clone(),
        model_label: spec.model.label.clone(),
        echo: spec.echo.clone(),
    })
}

/// Run the ensemble, honoring the NAF_WORKERS environment variable when set.
pub fn run_ensemble(spec: &RunSpec) -> Result<RunReport> {
    let workers = match std::env::var("NAF_WORKERS") {
        Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| {
            NafError::config(format!("NAF_WORKERS must be a positive integer, got {s:?}"))
        })?),
        Err(_) => None,
    };
    run_ensemble_with_workers(spec, workers)
}
