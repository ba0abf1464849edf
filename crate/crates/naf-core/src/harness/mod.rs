//! Ensemble harness: parse a run configuration, execute it on the requested
//! engine (trajectory ensemble or exact grid), and emit CSV outputs. Results
//! are bit-identical for a fixed (config, seed) pair regardless of how many
//! worker threads execute the ensemble.

pub mod compare;
pub mod config;
pub mod ensemble;
pub mod exact;
pub mod output;
pub mod scan;

pub use compare::{compare_series, Comparison};
pub use config::{load_run_spec, Engine, MomentumSpec, RunSpec, ScatteringSpec};
pub use ensemble::{run_ensemble, run_ensemble_with_workers};
pub use exact::run_exact_grid;
pub use scan::{momentum_scan, ScanTable};

use std::path::Path;

use crate::estimators::{ChannelTable, TimeSeries};
use crate::Result;

/// Momentum distribution sampled on a fixed grid.
#[derive(Debug, Clone)]
pub struct MomentumSeries {
    pub p: Vec<f64>,
    pub density: Vec<f64>,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub series: TimeSeries,
    pub channels: Option<ChannelTable>,
    pub momentum: Option<MomentumSeries>,
    pub n_trajectories: usize,
    pub n_failures: usize,
    /// always reported, zero included
    pub failure_fraction: f64,
    pub wall_seconds: f64,
    pub seed: u64,
    pub method_name: String,
    pub model_label: String,
    /// raw configuration text the run was built from
    pub echo: String,
}

/// Execute a run on whichever engine the spec selects.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    match &spec.engine {
        Engine::Trajectory(_) => run_ensemble(spec),
        Engine::ExactGrid => run_exact_grid(spec),
    }
}

/// Write the report's outputs next to the path named in the run spec: the
/// time series at `<output>`, the momentum distribution (when requested) at
/// `<output stem>_momentum.csv`, channels at `<output stem>_channels.csv`.
pub fn emit_outputs(report: &RunReport, spec: &RunSpec) -> Result<()> {
    let Some(path) = &spec.output else {
        return Ok(());
    };
    output::write_time_series(path, report)?;
    if let Some(momentum) = &report.momentum {
        output::write_momentum(&sibling(path, "momentum"), momentum, report)?;
    }
    if let Some(channels) = &report.channels {
        output::write_channels(&sibling(path, "channels"), channels, report)?;
    }
    Ok(())
}

fn sibling(path: &Path, tag: &str) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    path.with_file_name(format!("{stem}_{tag}.csv"))
}
