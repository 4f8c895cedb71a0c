//! RCA delay laws and per-transmission delay-and-sum volumes.
//!
//! A plane wave fired by one element set reaches a field point after
//! `tx_delay`; the echo returns to each receiving strip of the orthogonal set
//! after `rx_delay`. Beamforming samples the complex baseband data at the
//! two-way delay and undoes the demodulation phase at that delay.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{RcaError, Result};
use crate::geometry::{
    element_position, tukey_window, Orientation, ProbeGeometry, TransmitEvent, VoxelGrid,
};
use crate::sigproc::{sample_at, IqDataSet};

/// Plane-wave transmit delay (z*cos(theta) + u*sin(theta))/c, where u is the
/// in-plane coordinate: x for row transmissions, y for column transmissions.
pub fn tx_delay(in_plane: f64, z: f64, steer_angle: f64, sound_speed: f64) -> f64 {
    debug_assert!(z >= 0.0);
    (z * steer_angle.cos() + in_plane * steer_angle.sin()) / sound_speed
}

/// Return delay sqrt(z^2 + (v - r_n)^2)/c from a field point to the receiving
/// strip centered at r_n; v is the cross-plane coordinate (y when columns
/// receive, x when rows receive).
pub fn rx_delay(cross_plane: f64, z: f64, r_n: f64, sound_speed: f64) -> f64 {
    debug_assert!(z >= 0.0);
    let dv = cross_plane - r_n;
    (z * z + dv * dv).sqrt() / sound_speed
}

/// Two-way delay for voxel `r` and receive element `n` of one event.
pub fn total_delay(
    event: &TransmitEvent,
    r: [f64; 3],
    n: usize,
    geom: &ProbeGeometry,
) -> Result<f64> {
    let r_n = element_position(geom, event.orientation.receive(), n)?;
    let (in_plane, cross_plane) = match event.orientation {
        Orientation::RowTx => (r[0], r[1]),
        Orientation::ColumnTx => (r[1], r[0]),
    };
    Ok(tx_delay(in_plane, r[2], event.steer_angle, geom.sound_speed)
        + rx_delay(cross_plane, r[2], r_n, geom.sound_speed))
}

/// Complex volume reconstructed from a single transmission.
#[derive(Debug, Clone)]
pub struct PerTxVolume {
    /// x-fastest voxel values.
    pub values: Vec<Complex64>,
    pub grid: VoxelGrid,
    pub event: TransmitEvent,
}

/// Delay-and-sum one event onto the grid:
/// `V(R) = sum_n w_n * iq(n, d_tot) * exp(+i*2*pi*f_c*d_tot)`.
///
/// The +i phase term undoes the demodulation mixing at the delayed time so
/// that volumes from different events sum coherently.
pub fn das_volume(
    iq: &IqDataSet,
    event_index: usize,
    grid: &VoxelGrid,
    geom: &ProbeGeometry,
    rx_apod: &[f64],
) -> Result<PerTxVolume> {
    grid.validate()?;
    let ev = iq.events.get(event_index).ok_or_else(|| {
        RcaError::Mismatch(format!(
            "event index {} out of range for {} events",
            event_index,
            iq.events.len()
        ))
    })?;
    let event = ev.event;
    let rx_orient = event.orientation.receive();
    let n_rx = geom.element_count(rx_orient);
    if ev.channel_count != n_rx {
        return Err(RcaError::Mismatch(format!(
            "event has {} channels but the probe has {} receive elements",
            ev.channel_count, n_rx
        )));
    }
    if rx_apod.len() != n_rx {
        return Err(RcaError::Mismatch(format!(
            "receive apodization has {} weights for {} elements",
            rx_apod.len(),
            n_rx
        )));
    }
    if (iq.carrier - geom.center_frequency).abs() > 1e-9 * geom.center_frequency {
        return Err(RcaError::Mismatch(format!(
            "IQ carrier {} Hz does not match probe center frequency {} Hz",
            iq.carrier, geom.center_frequency
        )));
    }

    let positions: Vec<f64> = (0..n_rx)
        .map(|n| element_position(geom, rx_orient, n))
        .collect::<Result<_>>()?;
    let c = geom.sound_speed;
    let two_pi_fc = 2.0 * std::f64::consts::PI * iq.carrier;

    let values: Vec<Complex64> = (0..grid.voxel_count())
        .into_par_iter()
        .map(|lin| {
            let [i, j, k] = grid.index_of(lin);
            let p = grid.position(i, j, k);
            let (in_plane, cross_plane) = match event.orientation {
                Orientation::RowTx => (p[0], p[1]),
                Orientation::ColumnTx => (p[1], p[0]),
            };
            let d_tx = tx_delay(in_plane, p[2], event.steer_angle, c);
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, (&w, &r_n)) in rx_apod.iter().zip(positions.iter()).enumerate() {
                if w == 0.0 {
                    continue;
                }
                let d_tot = d_tx + rx_delay(cross_plane, p[2], r_n, c);
                let s = sample_at(iq, event_index, n, d_tot);
                if s.re != 0.0 || s.im != 0.0 {
                    acc += w * s * Complex64::from_polar(1.0, two_pi_fc * d_tot);
                }
            }
            acc
        })
        .collect();

    Ok(PerTxVolume {
        values,
        grid: grid.clone(),
        event,
    })
}

/// Beamform every event in the dataset with Tukey receive apodization.
/// Output order follows the firing order.
pub fn das_volumes(
    iq: &IqDataSet,
    grid: &VoxelGrid,
    geom: &ProbeGeometry,
    rx_alpha: f64,
) -> Result<Vec<PerTxVolume>> {
    let apod_rows = tukey_window(geom.element_count(Orientation::RowTx), rx_alpha)?;
    let apod_cols = tukey_window(geom.element_count(Orientation::ColumnTx), rx_alpha)?;
    (0..iq.events.len())
        .map(|e| {
            let apod = match iq.events[e].event.orientation.receive() {
                Orientation::RowTx => &apod_rows,
                Orientation::ColumnTx => &apod_cols,
            };
            das_volume(iq, e, grid, geom, apod)
        })
        .collect()
}
