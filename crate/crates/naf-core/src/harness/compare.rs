//! Deviation report between two time series. Columns are matched by name,
//! the second series is resampled onto the first's time grid by linear
//! interpolation over the overlapping range, and every deviation is also
//! expressed as a z-score against the combined standard error.

use super::output::read_time_series;
use crate::estimators::TimeSeries;
use crate::{NafError, Result};

#[derive(Debug, Clone)]
pub struct ColumnComparison {
    pub name: String,
    pub max_abs: f64,
    pub rms: f64,
    /// largest |deviation| / sqrt(err_a^2 + err_b^2); 0 when both standard
    /// errors vanish at every compared point
    pub max_z: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub columns: Vec<ColumnComparison>,
    pub max_abs: f64,
    pub rms: f64,
    pub max_z: f64,
    pub n_points: usize,
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} columns over {} points: max |dev| = {:.6e}, rms = {:.6e}, max |z| = {:.3}",
            self.columns.len(),
            self.n_points,
            self.max_abs,
            self.rms,
            self.max_z
        )?;
        for c in &self.columns {
            writeln!(
                f,
                "  {:<16} max |dev| = {:.6e}  rms = {:.6e}  max |z| = {:.3}",
                c.name, c.max_abs, c.rms, c.max_z
            )?;
        }
        Ok(())
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    // xs is strictly increasing; x is inside [xs[0], xs[last]]
    match xs.binary_search_by(|t| t.partial_cmp(&x).unwrap()) {
        Ok(i) => ys[i],
        Err(i) => {
            let (lo, hi) = (i - 1, i);
            let frac = (x - xs[lo]) / (xs[hi] - xs[lo]);
            ys[lo] + frac * (ys[hi] - ys[lo])
        }
    }
}

/// Compare the columns the two series share.
pub fn compare_series(a: &TimeSeries, b: &TimeSeries) -> Result<Comparison> {
    let t_lo = a.times[0].max(b.times[0]);
    let t_hi = a.times[a.times.len() - 1].min(b.times[b.times.len() - 1]);
    if t_hi < t_lo {
        return Err(NafError::config(format!(
            "time ranges do not overlap: [{}, {}] vs [{}, {}]",
            a.times[0],
            a.times[a.times.len() - 1],
            b.times[0],
            b.times[b.times.len() - 1]
        )));
    }
    let points: Vec<usize> = (0..a.times.len())
        .filter(|&k| a.times[k] >= t_lo - 1e-12 && a.times[k] <= t_hi + 1e-12)
        .collect();
    if points.is_empty() {
        return Err(NafError::config("no shared sample times in the overlap"));
    }

    let mut columns = Vec::new();
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut max_abs = 0.0f64;
    let mut max_z = 0.0f64;
    for (ca, name) in a.names.iter().enumerate() {
        let Some(cb) = b.names.iter().position(|n| n == name) else {
            continue;
        };
        let mut col_max = 0.0f64;
        let mut col_sq = 0.0;
        let mut col_z = 0.0f64;
        for &k in &points {
            let t = a.times[k].clamp(b.times[0], b.times[b.times.len() - 1]);
            let va = a.estimates[ca][k];
            let vb = interpolate(&b.times, &b.estimates[cb], t);
            let ea = a.stderrs[ca][k];
            let eb = interpolate(&b.times, &b.stderrs[cb], t);
            let dev = (va - vb).abs();
            col_max = col_max.max(dev);
            col_sq += dev * dev;
            let combined = (ea * ea + eb * eb).sqrt();
            if combined > 0.0 {
                col_z = col_z.max(dev / combined);
            }
        }
        sum_sq += col_sq;
        count += points.len();
        max_abs = max_abs.max(col_max);
        max_z = max_z.max(col_z);
        columns.push(ColumnComparison {
            name: name.clone(),
            max_abs: col_max,
            rms: (col_sq / points.len() as f64).sqrt(),
            max_z: col_z,
        });
    }
    if columns.is_empty() {
        return Err(NafError::config(format!(
            "the series share no columns: {:?} vs {:?}",
            a.names, b.names
        )));
    }
    Ok(Comparison {
        columns,
        max_abs,
        rms: (sum_sq / count as f64).sqrt(),
        max_z,
        n_points: points.len(),
    })
}

/// Compare two CSV files produced by the harness.
pub fn compare_files(a: &std::path::Path, b: &std::path::Path) -> Result<Comparison> {
    let sa = read_time_series(a)?;
    let sb = read_time_series(b)?;
    compare_series(&sa, &sb)
}
