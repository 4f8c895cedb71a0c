//! Probe layout, transmit schedules, apodization windows, and the voxel grid.
//!
//! A row-column array exposes `num_rows + num_cols` channels. Row elements are
//! indexed along x (each strip elongated along y) and steer plane waves in the
//! x-z plane; column elements are indexed along y and steer in y-z. A row
//! transmission is received on the columns and vice versa.

use crate::error::{RcaError, Result};
use serde::{Deserialize, Serialize};

/// Axis of the reconstruction volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Which element set fires the plane wave. `RowTx` steers in x-z and is
/// received on the columns; `ColumnTx` mirrors the roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    RowTx,
    ColumnTx,
}

impl Orientation {
    /// The element set that receives this orientation's transmission.
    pub fn receive(self) -> Orientation {
        match self {
            Orientation::RowTx => Orientation::ColumnTx,
            Orientation::ColumnTx => Orientation::RowTx,
        }
    }

    /// Axis along which this orientation's elements are indexed: x for rows,
    /// y for columns. Also the in-plane steering coordinate.
    pub fn element_axis(self) -> Axis {
        match self {
            Orientation::RowTx => Axis::X,
            Orientation::ColumnTx => Axis::Y,
        }
    }
}

/// RCA probe definition: element counts, pitch, pulse band, sampling, medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGeometry {
    pub num_rows: usize,
    pub num_cols: usize,
    /// Element-to-element spacing, meters.
    pub pitch: f64,
    /// Strip length, meters; must cover the orthogonal aperture.
    pub element_length: f64,
    /// Pulse center frequency f_c, hertz.
    pub center_frequency: f64,
    /// -6 dB two-sided bandwidth, hertz.
    pub bandwidth: f64,
    /// RF sampling rate f_s, hertz.
    pub sampling_frequency: f64,
    /// Speed of sound c, meters/second.
    pub sound_speed: f64,
}

impl ProbeGeometry {
    /// 32+32 element probe used by the test suite and default configs.
    pub fn desk_scale() -> Self {
        ProbeGeometry {
            num_rows: 32,
            num_cols: 32,
            pitch: 0.2e-3,
            element_length: 32.0 * 0.2e-3,
            center_frequency: 5.0e6,
            bandwidth: 6.0e6,
            sampling_frequency: 40.0e6,
            sound_speed: 1540.0,
        }
    }

    /// 128+128 element probe (0.2 mm pitch, 25.6 mm strips).
    pub fn full_scale() -> Self {
        ProbeGeometry {
            num_rows: 128,
            num_cols: 128,
            pitch: 0.2e-3,
            element_length: 128.0 * 0.2e-3,
            ..Self::desk_scale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_rows < 1 || self.num_cols < 1 {
            return Err(RcaError::InvalidGeometry(
                "probe needs at least one row and one column".into(),
            ));
        }
        if !(self.pitch > 0.0) {
            return Err(RcaError::InvalidGeometry("pitch must be positive".into()));
        }
        if !(self.sampling_frequency > 2.0 * (self.center_frequency + self.bandwidth / 2.0)) {
            return Err(RcaError::InvalidGeometry(format!(
                "sampling frequency {} Hz undersamples the band edge {} Hz",
                self.sampling_frequency,
                self.center_frequency + self.bandwidth / 2.0
            )));
        }
        let expected = self.num_rows.max(self.num_cols) as f64 * self.pitch;
        if (self.element_length - expected).abs() > 1e-12 {
            return Err(RcaError::InvalidGeometry(format!(
                "element length {} m does not cover the aperture ({} m expected)",
                self.element_length, expected
            )));
        }
        if !(self.sound_speed > 0.0) {
            return Err(RcaError::InvalidGeometry(
                "sound speed must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of elements in the given set.
    pub fn element_count(&self, orientation: Orientation) -> usize {
        match orientation {
            Orientation::RowTx => self.num_rows,
            Orientation::ColumnTx => self.num_cols,
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.center_frequency
    }

    /// Aperture extent of one element set, meters.
    pub fn aperture(&self, orientation: Orientation) -> f64 {
        self.element_count(orientation) as f64 * self.pitch
    }
}

/// Center coordinate r(n) of the n-th element of a set, on its element axis.
/// The aperture is centered on the probe origin.
pub fn element_position(geom: &ProbeGeometry, orientation: Orientation, n: usize) -> Result<f64> {
    let count = geom.element_count(orientation);
    if n >= count {
        return Err(RcaError::InvalidGeometry(format!(
            "element index {} out of range for {} elements",
            n, count
        )));
    }
    Ok((n as f64 - (count as f64 - 1.0) / 2.0) * geom.pitch)
}

/// Tapered-cosine window; alpha = 0 is rectangular, alpha = 1 is Hann.
/// Built by mirroring the first half so the result is bitwise symmetric.
pub fn tukey_window(count: usize, alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RcaError::InvalidGeometry(format!(
            "tukey alpha {} outside [0, 1]",
            alpha
        )));
    }
    if count < 2 {
        return Err(RcaError::InvalidGeometry(
            "tukey window needs at least 2 samples".into(),
        ));
    }
    let mut w = vec![1.0f64; count];
    if alpha > 0.0 {
        let last = (count - 1) as f64;
        for n in 0..count / 2 {
            let x = n as f64 / last;
            if x < alpha / 2.0 {
                w[n] = 0.5 * (1.0 + (std::f64::consts::PI * (2.0 * x / alpha - 1.0)).cos());
            }
            w[count - 1 - n] = w[n];
        }
    }
    Ok(w)
}

/// Per-element window evaluated at a continuous aperture coordinate, linearly
/// interpolated between element weights; zero outside the outermost elements.
pub fn window_weight_at(window: &[f64], pitch: f64, coord: f64) -> f64 {
    let count = window.len();
    let u = coord / pitch + (count as f64 - 1.0) / 2.0;
    if u < 0.0 || u > (count - 1) as f64 {
        return 0.0;
    }
    let i = (u.floor() as usize).min(count - 2);
    let f = u - i as f64;
    window[i] + f * (window[i + 1] - window[i])
}

/// Transmit apodization weight at a continuous in-plane coordinate.
pub fn apodization_weight_at(
    geom: &ProbeGeometry,
    orientation: Orientation,
    coord: f64,
    alpha: f64,
) -> Result<f64> {
    let w = tukey_window(geom.element_count(orientation), alpha)?;
    Ok(window_weight_at(&w, geom.pitch, coord))
}

/// One plane-wave firing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitEvent {
    pub orientation: Orientation,
    /// Steering angle theta, radians, in the orientation's steering plane.
    pub steer_angle: f64,
    /// Position in the firing order.
    pub index: usize,
}

/// Ordered firing plan: all row events first, then all column events, each
/// set evenly spanning [-range/2, +range/2].
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitSchedule {
    pub angles_per_orientation: usize,
    /// Full angular span, radians.
    pub angle_range: f64,
    pub events: Vec<TransmitEvent>,
}

impl TransmitSchedule {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn row_events(&self) -> impl Iterator<Item = &TransmitEvent> {
        self.events
            .iter()
            .filter(|e| e.orientation == Orientation::RowTx)
    }

    pub fn column_events(&self) -> impl Iterator<Item = &TransmitEvent> {
        self.events
            .iter()
            .filter(|e| e.orientation == Orientation::ColumnTx)
    }
}

/// Build a schedule with `n_per_orientation` angles per element set over the
/// given full span. A single angle per orientation sits at 0.
pub fn make_schedule(n_per_orientation: usize, range: f64) -> Result<TransmitSchedule> {
    if n_per_orientation < 1 {
        return Err(RcaError::InvalidGeometry(
            "schedule needs at least one angle per orientation".into(),
        ));
    }
    if !(range >= 0.0) || range >= std::f64::consts::PI {
        return Err(RcaError::InvalidGeometry(format!(
            "angle range {} rad outside [0, pi)",
            range
        )));
    }
    let n = n_per_orientation;
    let step = if n > 1 { range / (n as f64 - 1.0) } else { 0.0 };
    let angle = |i: usize| (i as f64 - (n as f64 - 1.0) / 2.0) * step;
    let mut events = Vec::with_capacity(2 * n);
    for orientation in [Orientation::RowTx, Orientation::ColumnTx] {
        for i in 0..n {
            events.push(TransmitEvent {
                orientation,
                steer_angle: angle(i),
                index: events.len(),
            });
        }
    }
    Ok(TransmitSchedule {
        angles_per_orientation: n,
        angle_range: range,
        events,
    })
}

/// Regular reconstruction grid. Voxel (i, j, k) sits at
/// `origin + (i*sx, j*sy, k*sz)`; storage is x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub dims: [usize; 3],
}

impl VoxelGrid {
    /// Grid of `dims` voxels centered on `center`.
    pub fn centered(center: [f64; 3], spacing: [f64; 3], dims: [usize; 3]) -> Self {
        let mut origin = [0.0; 3];
        for a in 0..3 {
            origin[a] = center[a] - (dims[a] as f64 - 1.0) / 2.0 * spacing[a];
        }
        VoxelGrid {
            origin,
            spacing,
            dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(RcaError::InvalidGeometry("grid has a zero dimension".into()));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(RcaError::InvalidGeometry(
                "grid spacing must be positive on all axes".into(),
            ));
        }
        if !(self.origin[2] > 0.0) {
            return Err(RcaError::InvalidGeometry(
                "all voxels must lie at z > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        ]
    }

    /// x-fastest storage order.
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn index_of(&self, linear: usize) -> [usize; 3] {
        let i = linear % self.dims[0];
        let j = (linear / self.dims[0]) % self.dims[1];
        let k = linear / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Coordinates of all voxel centers along one axis.
    pub fn axis_coords(&self, axis: Axis) -> Vec<f64> {
        let a = axis.index();
        (0..self.dims[a])
            .map(|i| self.origin[a] + i as f64 * self.spacing[a])
            .collect()
    }

    /// Voxel index whose center is nearest to a position (clamped to bounds).
    pub fn nearest_voxel(&self, pos: [f64; 3]) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let u = ((pos[a] - self.origin[a]) / self.spacing[a]).round();
            out[a] = u.clamp(0.0, (self.dims[a] - 1) as f64) as usize;
        }
        out
    }
}
