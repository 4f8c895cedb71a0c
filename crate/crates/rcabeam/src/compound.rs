//! Compounding of per-transmit beamformed volumes: coherent summation and
//! the multiplicative (filtered multiply-and-sum) variants.
//!
//! Multiplicative compounding replaces the plain sum over transmissions with
//! a sum over transmission *pairs*, each contributing a signed square root of
//! the product of the two beamformed samples. Restricting the pairs to
//! row-transmit x column-transmit combinations keeps the decorrelated pairs
//! (orthogonal steering planes) and discards the rest.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::beamform::PerTxVolume;
use crate::error::{RcaError, Result};
use crate::geometry::{Orientation, VoxelGrid};

/// How a pair product is formed from two beamformed voxel samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// Multiply the real parts (RF-domain product).
    RealRf,
    /// Multiply the complex baseband samples; the square root halves the
    /// phase, keeping the carrier usable for envelope detection.
    ComplexBaseband,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Das,
    Fmas,
    RcFmas,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Das => "das",
            Method::Fmas => "fmas",
            Method::RcFmas => "rcfmas",
        }
    }

    pub fn all() -> [Method; 3] {
        [Method::Das, Method::Fmas, Method::RcFmas]
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = RcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "das" => Ok(Method::Das),
            "fmas" => Ok(Method::Fmas),
            "rcfmas" | "rc-fmas" | "rc_fmas" => Ok(Method::RcFmas),
            other => Err(RcaError::Config(format!(
                "unknown method \"{}\" (expected das, fmas, or rcfmas)",
                other
            ))),
        }
    }
}

/// Detected-envelope volume (non-negative values).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeVolume {
    pub values: Vec<f64>,
    pub grid: VoxelGrid,
    pub method: Method,
    /// Number of pair terms each voxel summed (0 for coherent compounding).
    pub pairs_used: usize,
}

/// Log-compressed volume in dB relative to the volume maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct DbVolume {
    pub values: Vec<f64>,
    pub grid: VoxelGrid,
    pub dynamic_range_db: f64,
    pub method: Method,
}

/// Number of unordered transmission pairs i < j.
pub fn pair_count_fmas(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(RcaError::InsufficientData(format!(
            "multiplicative compounding needs at least 2 transmissions, got {}",
            n
        )));
    }
    Ok(n * (n - 1) / 2)
}

/// Number of row-transmit x column-transmit pairs.
pub fn pair_count_rcfmas(n_rows: usize, n_cols: usize) -> Result<usize> {
    if n_rows == 0 || n_cols == 0 {
        return Err(RcaError::InsufficientData(format!(
            "row-column pairing needs transmissions of both orientations, got {} rows and {} columns",
            n_rows, n_cols
        )));
    }
    Ok(n_rows * n_cols)
}

/// Signed square root of the product of two beamformed samples.
#[inline]
pub fn signed_sqrt_pair(a: Complex64, b: Complex64, mode: PairMode) -> Complex64 {
    match mode {
        PairMode::RealRf => {
            let v = a.re * b.re;
            // signum(0.0) is 1.0 in Rust; zero products must stay zero.
            if v == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(v.signum() * v.abs().sqrt(), 0.0)
            }
        }
        PairMode::ComplexBaseband => {
            let z = a * b;
            if z.norm() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                // Principal root: arg(z) in (-pi, pi] makes it unambiguous.
                Complex64::from_polar(z.norm().sqrt(), z.arg() / 2.0)
            }
        }
    }
}

fn check_common_grid(volumes: &[PerTxVolume]) -> Result<VoxelGrid> {
    let first = &volumes[0].grid;
    for v in volumes.iter().skip(1) {
        if v.grid != *first {
            return Err(RcaError::Mismatch(
                "beamformed volumes use different grids".into(),
            ));
        }
    }
    Ok(first.clone())
}

/// Indices into `volumes` ordered by firing position, so any permutation of
/// the input slice yields a bit-identical result.
fn firing_order(volumes: &[PerTxVolume]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..volumes.len()).collect();
    order.sort_by_key(|&i| volumes[i].event.index);
    order
}

/// Multiplicative compounding over all transmission pairs i < j.
pub fn fmas(volumes: &[PerTxVolume], mode: PairMode) -> Result<EnvelopeVolume> {
    if volumes.len() < 2 {
        return Err(RcaError::InsufficientData(format!(
            "multiplicative compounding needs at least 2 transmissions, got {}",
            volumes.len()
        )));
    }
    let grid = check_common_grid(volumes)?;
    let order = firing_order(volumes);
    let pairs = pair_count_fmas(order.len())?;
    let values: Vec<f64> = (0..grid.voxel_count())
        .into_par_iter()
        .map(|v| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..order.len() {
                let va = volumes[order[a]].values[v];
                for &ib in order.iter().skip(a + 1) {
                    acc += signed_sqrt_pair(va, volumes[ib].values[v], mode);
                }
            }
            acc.norm()
        })
        .collect();
    Ok(EnvelopeVolume {
        values,
        grid,
        method: Method::Fmas,
        pairs_used: pairs,
    })
}

/// Multiplicative compounding restricted to row-transmit x column-transmit
/// pairs.
pub fn rc_fmas(volumes: &[PerTxVolume], mode: PairMode) -> Result<EnvelopeVolume> {
    if volumes.is_empty() {
        return Err(RcaError::InsufficientData("no volumes to compound".into()));
    }
    let grid = check_common_grid(volumes)?;
    let order = firing_order(volumes);
    let rows: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| volumes[i].event.orientation == Orientation::RowTx)
        .collect();
    let cols: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| volumes[i].event.orientation == Orientation::ColumnTx)
        .collect();
    let pairs = pair_count_rcfmas(rows.len(), cols.len())?;
    let values: Vec<f64> = (0..grid.voxel_count())
        .into_par_iter()
        .map(|v| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &ir in &rows {
                let vr = volumes[ir].values[v];
                for &ic in &cols {
                    acc += signed_sqrt_pair(vr, volumes[ic].values[v], mode);
                }
            }
            acc.norm()
        })
        .collect();
    Ok(EnvelopeVolume {
        values,
        grid,
        method: Method::RcFmas,
        pairs_used: pairs,
    })
}

/// Coherent (delay-and-sum) compounding: envelope of the plain sum.
pub fn coherent_compound(volumes: &[PerTxVolume]) -> Result<EnvelopeVolume> {
    if volumes.is_empty() {
        return Err(RcaError::InsufficientData("no volumes to compound".into()));
    }
    let grid = check_common_grid(volumes)?;
    let order = firing_order(volumes);
    let values: Vec<f64> = (0..grid.voxel_count())
        .into_par_iter()
        .map(|v| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &i in &order {
                acc += volumes[i].values[v];
            }
            acc.norm()
        })
        .collect();
    Ok(EnvelopeVolume {
        values,
        grid,
        method: Method::Das,
        pairs_used: 0,
    })
}

/// 20 log10(v / max), floored at -dynamic_range_db.
pub fn log_compress(env: &EnvelopeVolume, dynamic_range_db: f64) -> Result<DbVolume> {
    if !(dynamic_range_db > 0.0) {
        return Err(RcaError::InvalidSignal(format!(
            "dynamic range {} dB must be positive",
            dynamic_range_db
        )));
    }
    let max = env.values.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(RcaError::InvalidSignal(
            "cannot log-compress an all-zero volume".into(),
        ));
    }
    let floor = -dynamic_range_db;
    let values = env
        .values
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                floor
            } else {
                (20.0 * (v / max).log10()).max(floor)
            }
        })
        .collect();
    Ok(DbVolume {
        values,
        grid: env.grid.clone(),
        dynamic_range_db,
        method: env.method,
    })
}
