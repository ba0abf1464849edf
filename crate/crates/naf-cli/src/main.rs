//! `naf`: run trajectory ensembles and exact grid references from TOML run
//! configurations, scan over initial momenta, and compare result files.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use naf_core::harness::{self, compare, load_run_spec, output, Engine, RunReport, RunSpec};
use naf_core::NafError;

#[derive(Parser)]
#[command(name = "naf", version, about = "trajectory ensembles for nonadiabatic dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the run described by a TOML configuration
    Run {
        config: PathBuf,
    },
    /// Repeat a scattering run over a list of initial momenta
    Scan {
        config: PathBuf,
        /// comma-separated momenta, e.g. --p0 10,15,22.5
        #[arg(long, value_delimiter = ',', required = true)]
        p0: Vec<f64>,
        /// channel table destination (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the exact grid reference for the configured model
    Exact {
        config: PathBuf,
    },
    /// Compare two time-series CSV files
    Compare {
        a: PathBuf,
        b: PathBuf,
    },
    /// Parse and validate a configuration without running it
    Validate {
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<RunSpec, NafError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        NafError::config(format!("cannot read {}: {e}", path.display()))
    })?;
    load_run_spec(&text)
}

fn finish(report: &RunReport, spec: &RunSpec) -> Result<(), NafError> {
    harness::emit_outputs(report, spec)?;
    match &spec.output {
        Some(path) => {
            println!("wrote {}", path.display());
            if report.momentum.is_some() || report.channels.is_some() {
                println!("  (momentum/channel tables as *_momentum.csv / *_channels.csv siblings)");
            }
        }
        None => print!("{}", output::render_time_series(report)),
    }
    eprintln!(
        "{} on {}: {} trajectories, {} failed ({:.2}%), {:.2} s",
        report.method_name,
        report.model_label,
        report.n_trajectories,
        report.n_failures,
        report.failure_fraction * 100.0,
        report.wall_seconds
    );
    if let Some(channels) = &report.channels {
        for ((label, p), e) in channels
            .labels
            .iter()
            .zip(&channels.probabilities)
            .zip(&channels.stderrs)
        {
            eprintln!("  {label:<8} {p:.6} +- {e:.6}");
        }
        if channels.still_interacting > 0 {
            eprintln!("  {} trajectories still interacting", channels.still_interacting);
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), NafError> {
    match cli.command {
        Command::Run { config } => {
            let spec = load(&config)?;
            let report = harness::run(&spec)?;
            finish(&report, &spec)
        }
        Command::Scan { config, p0, output: out } => {
            let spec = load(&config)?;
            let table = harness::momentum_scan(&spec, &p0, None)?;
            match out {
                Some(path) => {
                    output::write_text(&path, &table.to_csv())?;
                    println!("wrote {}", path.display());
                }
                None => print!("{}", table.to_csv()),
            }
            Ok(())
        }
        Command::Exact { config } => {
            let mut spec = load(&config)?;
            if !matches!(spec.engine, Engine::ExactGrid) {
                if !spec.model.is_1d() {
                    return Err(NafError::config(format!(
                        "exact propagation needs a 1-D model with a reference grid; {} has {} \
                         degrees of freedom",
                        spec.model.label, spec.model.n
                    )));
                }
                spec.engine = Engine::ExactGrid;
                spec.method_name = "exact_grid".to_string();
            }
            let report = harness::run_exact_grid(&spec)?;
            finish(&report, &spec)
        }
        Command::Compare { a, b } => {
            let cmp = compare::compare_files(&a, &b)?;
            print!("{cmp}");
            Ok(())
        }
        Command::Validate { config } => {
            let spec = load(&config)?;
            println!(
                "ok: {} via {}, dt = {}, {} steps to t = {}, {} trajectories, \
                 {} observables",
                spec.model.label,
                spec.method_name,
                spec.dt,
                spec.n_steps(),
                spec.t_final,
                spec.n_traj,
                spec.requests.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("naf: {e}");
            match e {
                NafError::Config(_) | NafError::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
