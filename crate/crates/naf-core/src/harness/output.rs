//! CSV emission and ingestion. Metadata rides in `# key = value` comment
//! lines above the header; numbers are written with the shortest
//! representation that round-trips through f64 parsing. Files are written to
//! a temporary sibling and renamed into place so readers never see a partial
//! file.

use std::fmt::Write as _;
use std::path::Path;

use super::{MomentumSeries, RunReport};
use crate::estimators::{ChannelTable, TimeSeries};
use crate::{NafError, Result};

fn meta_block(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# model = {}", report.model_label);
    let _ = writeln!(out, "# method = {}", report.method_name);
    let _ = writeln!(out, "# n_traj = {}", report.n_trajectories);
    let _ = writeln!(out, "# seed = {}", report.seed);
    let _ = writeln!(out, "# failures = {}/{}", report.n_failures, report.n_trajectories);
    out
}

/// Atomic text write: temporary sibling plus rename.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            tempfile::NamedTempFile::new_in(d)?
        }
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    std::io::Write::write_all(&mut tmp, contents.as_bytes())?;
    tmp.persist(path)
        .map_err(|e| NafError::Io(e.error))?;
    Ok(())
}

/// Time-series CSV text: header `time,<name>,<name>_stderr,...`, one row per
/// recorded time.
pub fn render_time_series(report: &RunReport) -> String {
    let series = &report.series;
    let mut out = meta_block(report);
    out.push_str("time");
    for name in &series.names {
        let _ = write!(out, ",{name},{name}_stderr");
    }
    out.push('\n');
    for (k, t) in series.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for (est, err) in series.estimates.iter().zip(&series.stderrs) {
            let _ = write!(out, ",{},{}", est[k], err[k]);
        }
        out.push('\n');
    }
    out
}

pub fn write_time_series(path: &Path, report: &RunReport) -> Result<()> {
    write_text(path, &render_time_series(report))
}

/// Momentum distribution CSV with header `P,density`.
pub fn write_momentum(path: &Path, momentum: &MomentumSeries, report: &RunReport) -> Result<()> {
    let mut out = meta_block(report);
    out.push_str("P,density\n");
    for (p, d) in momentum.p.iter().zip(&momentum.density) {
        let _ = writeln!(out, "{p},{d}");
    }
    write_text(path, &out)
}

/// Channel-table CSV with header `channel,probability,stderr`.
pub fn write_channels(path: &Path, channels: &ChannelTable, report: &RunReport) -> Result<()> {
    let mut out = meta_block(report);
    let _ = writeln!(out, "# still_interacting = {}", channels.still_interacting);
    out.push_str("channel,probability,stderr\n");
    for ((label, p), err) in channels
        .labels
        .iter()
        .zip(&channels.probabilities)
        .zip(&channels.stderrs)
    {
        let _ = writeln!(out, "{label},{p},{err}");
    }
    write_text(path, &out)
}

/// Read a time-series CSV written by `write_time_series` (or any file with
/// the same shape) back into a TimeSeries.
pub fn read_time_series(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut n_trajectories = 0;
    let mut n_failures = 0;
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else { continue };
        if let Some((key, value)) = rest.split_once('=') {
            match key.trim() {
                "n_traj" => n_trajectories = value.trim().parse().unwrap_or(0),
                "failures" => {
                    if let Some((failed, _)) = value.trim().split_once('/') {
                        n_failures = failed.trim().parse().unwrap_or(0);
                    }
                }
                _ => {}
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| NafError::config(format!("{}: {e}", path.display())))?
        .clone();
    if header.get(0) != Some("time") || header.len() < 3 || header.len() % 2 == 0 {
        return Err(NafError::config(format!(
            "{}: expected header time,<name>,<name>_stderr,...",
            path.display()
        )));
    }
    let mut names = Vec::new();
    for i in (1..header.len()).step_by(2) {
        let name = header.get(i).unwrap();
        let err_name = header.get(i + 1).unwrap();
        if err_name != format!("{name}_stderr") {
            return Err(NafError::config(format!(
                "{}: column {err_name:?} should be {name}_stderr",
                path.display()
            )));
        }
        names.push(name.to_string());
    }
    let ncols = names.len();
    let mut times = Vec::new();
    let mut estimates = vec![Vec::new(); ncols];
    let mut stderrs = vec![Vec::new(); ncols];
    for record in reader.records() {
        let record = record.map_err(|e| NafError::config(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    NafError::config(format!("{}: bad number in column {i}", path.display()))
                })
        };
        times.push(parse(0)?);
        for c in 0..ncols {
            estimates[c].push(parse(1 + 2 * c)?);
            stderrs[c].push(parse(2 + 2 * c)?);
        }
    }
    if times.is_empty() {
        return Err(NafError::config(format!("{}: no data rows", path.display())));
    }
    Ok(TimeSeries {
        times,
        names,
        estimates,
        stderrs,
        n_trajectories,
        n_failures,
        single_sample: n_trajectories == 1,
    })
}
