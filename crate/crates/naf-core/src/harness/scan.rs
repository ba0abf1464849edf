//! Momentum scan: repeat a scattering run over a list of initial momenta and
//! tabulate the channel probabilities against P0. The seed is reused across
//! points, giving common random numbers along the scan.

use super::config::{RunSpec, ScatteringSpec};
use super::ensemble::{run_ensemble, run_ensemble_with_workers};
use crate::models::catalog;
use crate::{NafError, Result};

#[derive(Debug, Clone)]
pub struct ScanTable {
    pub p0: Vec<f64>,
    pub labels: Vec<String>,
    /// [p0 index][channel]
    pub probabilities: Vec<Vec<f64>>,
    pub stderrs: Vec<Vec<f64>>,
}

impl ScanTable {
    /// CSV rendering: `p0,<label>,<label>_stderr,...`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p0");
        for label in &self.labels {
            out.push_str(&format!(",{label},{label}_stderr"));
        }
        out.push('\n');
        for (i, p0) in self.p0.iter().enumerate() {
            out.push_str(&format!("{p0}"));
            for (p, e) in self.probabilities[i].iter().zip(&self.stderrs[i]) {
                out.push_str(&format!(",{p},{e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn with_p0(base: &RunSpec, p0: f64) -> Result<RunSpec> {
    let mut model = match base.model.label.as_str() {
        "tully_sac" => catalog::tully_sac(p0),
        "tully_dac" => catalog::tully_dac(p0),
        "tully_ecr" => catalog::tully_ecr(p0),
        "asym_sac" => catalog::asym_sac(p0),
        other => {
            return Err(NafError::config(format!(
                "momentum scans rebuild the initial packet from p0, which only the 1-D \
                 scattering models support, not {other}"
            )));
        }
    };
    model.init.occupation = base.model.init.occupation;
    model.init.occupation_rep = base.model.init.occupation_rep;
    let mut spec = base.clone();
    spec.model = model;
    Ok(spec)
}

/// One ensemble per P0; every run reports its scattering channels.
pub fn momentum_scan(
    base: &RunSpec,
    p0_list: &[f64],
    workers: Option<usize>,
) -> Result<ScanTable> {
    if p0_list.is_empty() {
        return Err(NafError::config("momentum scan needs at least one p0"));
    }
    let mut labels = Vec::new();
    let mut probabilities = Vec::new();
    let mut stderrs = Vec::new();
    for &p0 in p0_list {
        let mut spec = with_p0(base, p0)?;
        if spec.scattering.is_none() {
            spec.scattering = Some(ScatteringSpec { free_halfwidth: 5.0 });
        }
        let report = match workers {
            Some(_) => run_ensemble_with_workers(&spec, workers)?,
            None => run_ensemble(&spec)?,
        };
        let table = report.channels.expect("scattering requested");
        if labels.is_empty() {
            labels = table.labels.clone();
        }
        probabilities.push(table.probabilities);
        stderrs.push(table.stderrs);
    }
    Ok(ScanTable { p0: p0_list.to_vec(), labels, probabilities, stderrs })
}
