//! Image-quality metrics: per-axis FWHM, peak intensity ratio, peak-to-max-
//! side-lobe ratio, and region contrast/noise ratios, plus the ROI plumbing
//! they share.

use crate::compound::{EnvelopeVolume, Method};
use crate::error::{RcaError, Result};
use crate::geometry::{Axis, VoxelGrid};

/// What a region of interest measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoiRole {
    Tissue1,
    Tissue2,
    Tissue,
    Noise,
}

/// Axis-aligned box ROI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiBox {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    pub role: RoiRole,
}

/// Location and value of a volume's global maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakInfo {
    pub index: [usize; 3],
    pub linear: usize,
    pub position: [f64; 3],
    pub value: f64,
}

/// Ellipsoidal main-lobe mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakMask {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
}

impl PeakMask {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let mut q = 0.0;
        for a in 0..3 {
            let d = (p[a] - self.center[a]) / self.semi_axes[a];
            q += d * d;
        }
        q <= 1.0
    }

    pub fn scaled(&self, factor: f64) -> PeakMask {
        PeakMask {
            center: self.center,
            semi_axes: [
                self.semi_axes[0] * factor,
                self.semi_axes[1] * factor,
                self.semi_axes[2] * factor,
            ],
        }
    }

    fn inside_grid(&self, grid: &VoxelGrid) -> bool {
        (0..3).all(|a| {
            let lo = grid.origin[a];
            let hi = grid.origin[a] + (grid.dims[a] - 1) as f64 * grid.spacing[a];
            self.center[a] - self.semi_axes[a] >= lo - 1e-12
                && self.center[a] + self.semi_axes[a] <= hi + 1e-12
        })
    }
}

/// Global argmax; ties break to the lowest linear index.
pub fn find_peak(env: &EnvelopeVolume) -> Result<PeakInfo> {
    let mut best: Option<(usize, f64)> = None;
    for (v, &x) in env.values.iter().enumerate() {
        if best.map_or(true, |(_, bx)| x > bx) {
            best = Some((v, x));
        }
    }
    let (linear, value) = best.ok_or_else(|| {
        RcaError::InsufficientData("cannot locate a peak in an empty volume".into())
    })?;
    if value <= 0.0 {
        return Err(RcaError::InsufficientData(
            "cannot locate a peak in an all-zero volume".into(),
        ));
    }
    let index = env.grid.index_of(linear);
    Ok(PeakInfo {
        index,
        linear,
        position: env.grid.position(index[0], index[1], index[2]),
        value,
    })
}

/// Envelope value on the axis-aligned line through `fixed`, at index t.
fn line_value(env: &EnvelopeVolume, axis: Axis, fixed: [usize; 3], t: usize) -> f64 {
    let mut idx = fixed;
    idx[axis.index()] = t;
    env.values[env.grid.linear_index(idx[0], idx[1], idx[2])]
}

/// Full width at half maximum along one axis through the global peak, with
/// sub-voxel linear interpolation at both half-maximum crossings.
pub fn fwhm(env: &EnvelopeVolume, axis: Axis) -> Result<f64> {
    let peak = find_peak(env)?;
    let a = axis.index();
    let n = env.grid.dims[a];
    let half = peak.value / 2.0;
    let coord =
        |t: usize| env.grid.origin[a] + t as f64 * env.grid.spacing[a];
    let value = |t: usize| line_value(env, axis, peak.index, t);

    // Walk outward until the profile drops below half maximum.
    let mut upper = None;
    for t in peak.index[a] + 1..n {
        let (v0, v1) = (value(t - 1), value(t));
        if v1 < half {
            let f = (v0 - half) / (v0 - v1);
            upper = Some(coord(t - 1) + f * env.grid.spacing[a]);
            break;
        }
    }
    let mut lower = None;
    for t in (0..peak.index[a]).rev() {
        let (v0, v1) = (value(t + 1), value(t));
        if v1 < half {
            let f = (v0 - half) / (v0 - v1);
            lower = Some(coord(t + 1) - f * env.grid.spacing[a]);
            break;
        }
    }
    match (lower, upper) {
        (Some(lo), Some(hi)) => Ok(hi - lo),
        _ => Err(RcaError::InvalidRegion(format!(
            "profile along {:?} does not cross half maximum inside the grid",
            axis
        ))),
    }
}

/// Main-lobe mask with semi-axes equal to the per-axis FWHM.
pub fn peak_mask_from_fwhm(env: &EnvelopeVolume) -> Result<PeakMask> {
    let peak = find_peak(env)?;
    Ok(PeakMask {
        center: peak.position,
        semi_axes: [
            fwhm(env, Axis::X)?,
            fwhm(env, Axis::Y)?,
            fwhm(env, Axis::Z)?,
        ],
    })
}

/// Peak intensity ratio: main-lobe intensity over whole-grid intensity,
/// with intensity = envelope squared.
pub fn pir(env: &EnvelopeVolume, mask: &PeakMask) -> Result<f64> {
    if !mask.inside_grid(&env.grid) {
        return Err(RcaError::InvalidRegion(
            "peak mask extends outside the grid".into(),
        ));
    }
    let mut inside = 0.0;
    let mut total = 0.0;
    for (v, &x) in env.values.iter().enumerate() {
        let i = env.grid.index_of(v);
        let intensity = x * x;
        total += intensity;
        if mask.contains(env.grid.position(i[0], i[1], i[2])) {
            inside += intensity;
        }
    }
    if total == 0.0 {
        return Err(RcaError::InsufficientData(
            "zero total intensity in the volume".into(),
        ));
    }
    Ok(inside / total)
}

/// Sentinel for a mathematically infinite side-lobe ratio (all-zero exterior).
pub const PMSLR_SENTINEL_DB: f64 = 120.0;

/// Peak amplitude over the maximum amplitude outside the exclusion region
/// (the main-lobe mask dilated by 2), in dB.
pub fn pmslr(env: &EnvelopeVolume, mask: &PeakMask) -> Result<f64> {
    let peak = find_peak(env)?;
    let exclusion = mask.scaled(2.0);
    let mut side: Option<f64> = None;
    for (v, &x) in env.values.iter().enumerate() {
        let i = env.grid.index_of(v);
        if !exclusion.contains(env.grid.position(i[0], i[1], i[2])) {
            side = Some(side.map_or(x, |s: f64| s.max(x)));
        }
    }
    let side = side.ok_or_else(|| {
        RcaError::InvalidRegion("exclusion region covers the whole grid".into())
    })?;
    if side == 0.0 {
        return Ok(PMSLR_SENTINEL_DB);
    }
    Ok(20.0 * (peak.value / side).log10())
}

/// Index range [lo, hi] of voxels whose centers fall inside the ROI, per axis.
fn roi_voxel_range(grid: &VoxelGrid, roi: &RoiBox) -> Result<[(usize, usize); 3]> {
    let mut out = [(0usize, 0usize); 3];
    for a in 0..3 {
        let min = roi.center[a] - roi.half_extents[a];
        let max = roi.center[a] + roi.half_extents[a];
        let first = grid.origin[a];
        let last = grid.origin[a] + (grid.dims[a] - 1) as f64 * grid.spacing[a];
        if min < first - 1e-12 || max > last + 1e-12 {
            return Err(RcaError::InvalidRegion(format!(
                "ROI [{}, {}] m leaves the grid [{}, {}] m on axis {}",
                min, max, first, last, a
            )));
        }
        let lo = ((min - first) / grid.spacing[a] - 1e-9).ceil().max(0.0) as usize;
        let hi = (((max - first) / grid.spacing[a] + 1e-9).floor() as usize)
            .min(grid.dims[a] - 1);
        if hi < lo {
            return Err(RcaError::InvalidRegion(
                "ROI contains no voxel centers".into(),
            ));
        }
        out[a] = (lo, hi);
    }
    Ok(out)
}

fn mean_over_range(env: &EnvelopeVolume, r: &[(usize, usize); 3]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in r[2].0..=r[2].1 {
        for j in r[1].0..=r[1].1 {
            for i in r[0].0..=r[0].1 {
                sum += env.values[env.grid.linear_index(i, j, k)];
                count += 1;
            }
        }
    }
    sum / count as f64
}

/// Mean envelope over an ROI.
pub fn roi_mean(env: &EnvelopeVolume, roi: &RoiBox) -> Result<f64> {
    let r = roi_voxel_range(&env.grid, roi)?;
    Ok(mean_over_range(env, &r))
}

fn check_comparable(a: &RoiBox, b: &RoiBox) -> Result<()> {
    if (a.center[2] - b.center[2]).abs() > 1e-9 {
        return Err(RcaError::InvalidRegion(format!(
            "ROIs sit at different depths: {} m vs {} m",
            a.center[2], b.center[2]
        )));
    }
    let overlap = (0..3).all(|ax| {
        (a.center[ax] - b.center[ax]).abs()
            < a.half_extents[ax] + b.half_extents[ax] - 1e-12
    });
    if overlap {
        return Err(RcaError::InvalidRegion("ROIs overlap".into()));
    }
    Ok(())
}

fn db_ratio_of_means(env: &EnvelopeVolume, r1: &RoiBox, r2: &RoiBox) -> Result<f64> {
    check_comparable(r1, r2)?;
    let m1 = roi_mean(env, r1)?;
    let m2 = roi_mean(env, r2)?;
    if m2 == 0.0 {
        return Err(RcaError::InsufficientData(
            "reference ROI has zero mean envelope".into(),
        ));
    }
    Ok(20.0 * (m1 / m2).log10())
}

/// Tissue contrast ratio: 20 log10 of the mean-envelope ratio between the
/// highly scattering region and the background tissue region.
pub fn tcr(env: &EnvelopeVolume, roi_t1: &RoiBox, roi_t2: &RoiBox) -> Result<f64> {
    db_ratio_of_means(env, roi_t1, roi_t2)
}

/// Tissue-to-noise ratio: 20 log10 of the mean-envelope ratio between a
/// tissue region and an anechoic (noise-floor) region.
pub fn tnr(env: &EnvelopeVolume, roi_tissue: &RoiBox, roi_noise: &RoiBox) -> Result<f64> {
    db_ratio_of_means(env, roi_tissue, roi_noise)
}

/// Per-subregion statistics from splitting an ROI along the lateral (x) axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub mean: f64,
    pub standard_error: f64,
    pub per_split: Vec<f64>,
}

fn stats_of(values: Vec<f64>) -> SplitStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let standard_error = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    SplitStats {
        mean,
        standard_error,
        per_split: values,
    }
}

/// Near-equal contiguous chunks of the ROI's lateral voxel range.
fn lateral_chunks(
    grid: &VoxelGrid,
    roi: &RoiBox,
    splits: usize,
) -> Result<Vec<[(usize, usize); 3]>> {
    if splits == 0 {
        return Err(RcaError::InvalidRegion("splits must be positive".into()));
    }
    let r = roi_voxel_range(grid, roi)?;
    let len = r[0].1 - r[0].0 + 1;
    if len < splits {
        return Err(RcaError::InvalidRegion(format!(
            "ROI spans {} lateral voxels, fewer than {} splits",
            len, splits
        )));
    }
    Ok((0..splits)
        .map(|c| {
            let start = r[0].0 + c * len / splits;
            let end = r[0].0 + (c + 1) * len / splits - 1;
            [(start, end), r[1], r[2]]
        })
        .collect())
}

/// Mean envelope per lateral subregion, averaged with its standard error.
pub fn subregion_stats(env: &EnvelopeVolume, roi: &RoiBox, splits: usize) -> Result<SplitStats> {
    let chunks = lateral_chunks(&env.grid, roi, splits)?;
    Ok(stats_of(
        chunks.iter().map(|c| mean_over_range(env, c)).collect(),
    ))
}

/// dB ratio of mean envelopes computed per lateral subregion, then averaged;
/// returns (mean dB, standard error dB).
pub fn subregion_db_ratio(
    env: &EnvelopeVolume,
    roi1: &RoiBox,
    roi2: &RoiBox,
    splits: usize,
) -> Result<(f64, f64)> {
    check_comparable(roi1, roi2)?;
    let c1 = lateral_chunks(&env.grid, roi1, splits)?;
    let c2 = lateral_chunks(&env.grid, roi2, splits)?;
    let mut ratios = Vec::with_capacity(splits);
    for (a, b) in c1.iter().zip(c2.iter()) {
        let m1 = mean_over_range(env, a);
        let m2 = mean_over_range(env, b);
        if m2 == 0.0 {
            return Err(RcaError::InsufficientData(
                "reference subregion has zero mean envelope".into(),
            ));
        }
        ratios.push(20.0 * (m1 / m2).log10());
    }
    let s = stats_of(ratios);
    Ok((s.mean, s.standard_error))
}

/// One row of the quality summary; fields stay unset when a metric does not
/// apply to the experiment (e.g. contrast ratios for a point target).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: Method,
    pub depth: f64,
    pub fwhm_x: Option<f64>,
    pub fwhm_y: Option<f64>,
    pub fwhm_z: Option<f64>,
    pub pir: Option<f64>,
    pub pmslr_db: Option<f64>,
    pub tcr_db: Option<f64>,
    pub tcr_se_db: Option<f64>,
    pub tnr_db: Option<f64>,
    pub tnr_se_db: Option<f64>,
}

impl MetricsReport {
    pub fn empty(method: Method, depth: f64) -> Self {
        MetricsReport {
            method,
            depth,
            fwhm_x: None,
            fwhm_y: None,
            fwhm_z: None,
            pir: None,
            pmslr_db: None,
            tcr_db: None,
            tcr_se_db: None,
            tnr_db: None,
            tnr_se_db: None,
        }
    }
}
