//! Parameter sweep over transmission count and angular range, evaluated on a
//! point target, producing one table row per (angle count, range, method).

use crate::compound::{pair_count_fmas, pair_count_rcfmas, Method};
use crate::error::{RcaError, Result};

use super::config::ExperimentConfig;
use super::experiment::run_experiment;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Total transmissions in the cell (half per orientation).
    pub n_angles: usize,
    pub range_deg: f64,
    pub method: Method,
    pub fwhm_x: f64,
    pub fwhm_z: f64,
    pub pir: f64,
    pub pmslr_db: f64,
    pub compound_seconds: f64,
    pub pair_count: usize,
}

/// Evaluate the full cross product of angle counts and ranges on the base
/// config's point target. Cells run sequentially (each run is internally
/// parallel); rows come out in (angles, range, method) order with no holes.
pub fn run_sweep(
    base: &ExperimentConfig,
    angle_counts: &[usize],
    ranges_deg: &[f64],
) -> Result<Vec<SweepRow>> {
    if angle_counts.is_empty() || ranges_deg.is_empty() {
        return Err(RcaError::Config("sweep axes must be nonempty".into()));
    }
    let mut rows = Vec::new();
    for &n_angles in angle_counts {
        for &range_deg in ranges_deg {
            let mut config = base.clone();
            config.schedule.angles_total = n_angles;
            config.schedule.range_deg = range_deg;
            let out = run_experiment(&config)?;
            for m in &out.per_method {
                let report = m.reports.first().ok_or_else(|| {
                    RcaError::InsufficientData("sweep run produced no report".into())
                })?;
                let expected_pairs = match m.method {
                    Method::Das => 0,
                    Method::Fmas => pair_count_fmas(n_angles)?,
                    Method::RcFmas => pair_count_rcfmas(n_angles / 2, n_angles / 2)?,
                };
                debug_assert_eq!(m.envelope.pairs_used, expected_pairs);
                rows.push(SweepRow {
                    n_angles,
                    range_deg,
                    method: m.method,
                    fwhm_x: report.fwhm_x.unwrap_or(f64::NAN),
                    fwhm_z: report.fwhm_z.unwrap_or(f64::NAN),
                    pir: report.pir.unwrap_or(f64::NAN),
                    pmslr_db: report.pmslr_db.unwrap_or(f64::NAN),
                    compound_seconds: m.compound_seconds,
                    pair_count: m.envelope.pairs_used,
                });
            }
        }
    }
    Ok(rows)
}

/// Parse a sweep axis argument: either a single value or `start:stop:step`
/// (inclusive bounds).
pub fn parse_axis(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| RcaError::Config(format!("bad axis value \"{}\"", s)))
    };
    match parts.as_slice() {
        [one] => Ok(vec![parse(one)?]),
        [start, stop, step] => {
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if !(step > 0.0) || stop < start {
                return Err(RcaError::Config(format!(
                    "bad axis range \"{}\": need start <= stop and step > 0",
                    text
                )));
            }
            let mut out = Vec::new();
            let mut k = 0usize;
            loop {
                let v = start + k as f64 * step;
                if v > stop + 1e-9 {
                    break;
                }
                out.push(v);
                k += 1;
            }
            Ok(out)
        }
        _ => Err(RcaError::Config(format!(
            "bad axis \"{}\": expected VALUE or START:STOP:STEP",
            text
        ))),
    }
}
