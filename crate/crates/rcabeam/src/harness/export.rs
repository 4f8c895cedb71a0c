//! Output writers: raw volumes with sidecar metadata, grayscale slice
//! images, profile CSVs, and the metric/sweep tables.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::compound::{DbVolume, EnvelopeVolume};
use crate::error::{RcaError, Result};
use crate::geometry::Axis;
use crate::metrics::MetricsReport;

use super::sweep::SweepRow;

/// Write the envelope volume as raw little-endian f32 in x-fastest order,
/// plus a human-readable key = value sidecar. Returns (raw path, meta path).
pub fn export_volume(
    env: &EnvelopeVolume,
    config_hash: &str,
    base: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let raw_path = base.with_extension("raw");
    let meta_path = base.with_extension("meta");
    let mut raw = BufWriter::new(File::create(&raw_path)?);
    for &v in &env.values {
        raw.write_all(&(v as f32).to_le_bytes())?;
    }
    raw.flush()?;

    let g = &env.grid;
    let mut meta = String::new();
    meta.push_str("dtype = f32le\n");
    meta.push_str("order = x-fastest\n");
    meta.push_str(&format!("dims = {} {} {}\n", g.dims[0], g.dims[1], g.dims[2]));
    meta.push_str(&format!(
        "spacing_m = {} {} {}\n",
        g.spacing[0], g.spacing[1], g.spacing[2]
    ));
    meta.push_str(&format!(
        "origin_m = {} {} {}\n",
        g.origin[0], g.origin[1], g.origin[2]
    ));
    meta.push_str(&format!("method = {}\n", env.method));
    meta.push_str(&format!("pairs_used = {}\n", env.pairs_used));
    meta.push_str(&format!("config_hash = {}\n", config_hash));
    std::fs::write(&meta_path, meta)?;
    Ok((raw_path, meta_path))
}

/// Read back a raw f32 volume written by [`export_volume`].
pub fn read_raw_volume(path: &Path) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(RcaError::InvalidSignal(format!(
            "raw volume {} has a truncated sample",
            path.display()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Slice plane selector: the fixed index is a voxel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlicePlane {
    Xy { k: usize },
    Xz { j: usize },
    Yz { i: usize },
}

/// Write one plane of a log-compressed volume as an 8-bit binary portable
/// graymap, mapping [-dynamic_range, 0] dB linearly onto [0, 255].
pub fn export_slice(db: &DbVolume, plane: SlicePlane, path: &Path) -> Result<()> {
    let g = &db.grid;
    let (width, height) = match plane {
        SlicePlane::Xy { k } => {
            bounds_check(k, g.dims[2], "z")?;
            (g.dims[0], g.dims[1])
        }
        SlicePlane::Xz { j } => {
            bounds_check(j, g.dims[1], "y")?;
            (g.dims[0], g.dims[2])
        }
        SlicePlane::Yz { i } => {
            bounds_check(i, g.dims[0], "x")?;
            (g.dims[1], g.dims[2])
        }
    };
    let dr = db.dynamic_range_db;
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", width, height)?;
    let mut row = Vec::with_capacity(width);
    for r in 0..height {
        row.clear();
        for c in 0..width {
            let v = match plane {
                SlicePlane::Xy { k } => db.values[g.linear_index(c, r, k)],
                SlicePlane::Xz { j } => db.values[g.linear_index(c, j, r)],
                SlicePlane::Yz { i } => db.values[g.linear_index(i, c, r)],
            };
            let pixel = ((v / dr + 1.0) * 255.0).round().clamp(0.0, 255.0) as u8;
            row.push(pixel);
        }
        out.write_all(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn bounds_check(index: usize, dim: usize, axis: &str) -> Result<()> {
    if index >= dim {
        return Err(RcaError::InvalidRegion(format!(
            "slice index {} outside the grid ({} voxels along {})",
            index, dim, axis
        )));
    }
    Ok(())
}

/// CSV of the dB profile along one axis through the volume's brightest voxel:
/// `position_mm,amplitude_db`, one row per voxel along the axis.
pub fn export_profile(db: &DbVolume, axis: Axis, path: &Path) -> Result<()> {
    let g = &db.grid;
    let peak = db
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(v, _)| g.index_of(v))
        .ok_or_else(|| RcaError::InsufficientData("empty volume".into()))?;
    let a = axis.index();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "position_mm,amplitude_db")?;
    for t in 0..g.dims[a] {
        let mut idx = peak;
        idx[a] = t;
        let v = db.values[g.linear_index(idx[0], idx[1], idx[2])];
        let pos_mm = (g.origin[a] + t as f64 * g.spacing[a]) * 1e3;
        writeln!(out, "{},{}", pos_mm, v)?;
    }
    out.flush()?;
    Ok(())
}

fn opt_cell(v: Option<f64>, scale: f64) -> String {
    v.map(|x| format!("{}", x * scale)).unwrap_or_default()
}

/// One CSV row per report: method, depth, and whichever metrics were set.
pub fn export_metrics_csv(reports: &[MetricsReport], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "method,depth_mm,fwhm_x_mm,fwhm_y_mm,fwhm_z_mm,pir,pmslr_db,tcr_db,tcr_se_db,tnr_db,tnr_se_db"
    )?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.depth * 1e3,
            opt_cell(r.fwhm_x, 1e3),
            opt_cell(r.fwhm_y, 1e3),
            opt_cell(r.fwhm_z, 1e3),
            opt_cell(r.pir, 1.0),
            opt_cell(r.pmslr_db, 1.0),
            opt_cell(r.tcr_db, 1.0),
            opt_cell(r.tcr_se_db, 1.0),
            opt_cell(r.tnr_db, 1.0),
            opt_cell(r.tnr_se_db, 1.0),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Sweep table: one CSV row per (angle count, range, method) cell.
pub fn export_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "n_angles,range_deg,method,fwhm_x_mm,fwhm_z_mm,pir,pmslr_db,compound_runtime_s,pair_count"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n_angles,
            r.range_deg,
            r.method,
            r.fwhm_x * 1e3,
            r.fwhm_z * 1e3,
            r.pir,
            r.pmslr_db,
            r.compound_seconds,
            r.pair_count,
        )?;
    }
    out.flush()?;
    Ok(())
}
