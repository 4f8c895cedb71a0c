//! Analytic RF channel-data synthesis for point-scatterer phantoms.
//!
//! Each echo is the transmit pulse delayed by the plane-wave forward delay to
//! the scatterer plus the return delay to the receiving strip, weighted by the
//! transmit apodization at the scatterer's in-plane coordinate and 1/r
//! spherical spreading on receive. No element directivity, attenuation, or
//! transmit spreading: the claims under study concern beamforming artifacts,
//! not absolute amplitude calibration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::beamform::tx_delay;
use crate::error::{RcaError, Result};
use crate::geometry::{
    element_position, tukey_window, window_weight_at, Orientation, ProbeGeometry,
    TransmitEvent, TransmitSchedule,
};

/// Point reflector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: [f64; 3],
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionRole {
    HighScatter,
    Anechoic,
    Background,
}

/// Axis-aligned labeled shape used for phantom construction and metric ROIs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionShape {
    /// Cylinder with its axis along y.
    TubeAlongY {
        center_x: f64,
        center_z: f64,
        radius: f64,
        y_min: f64,
        y_max: f64,
    },
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
}

impl RegionShape {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            RegionShape::TubeAlongY {
                center_x,
                center_z,
                radius,
                y_min,
                y_max,
            } => {
                let dx = p[0] - center_x;
                let dz = p[2] - center_z;
                p[1] >= y_min && p[1] <= y_max && dx * dx + dz * dz <= radius * radius
            }
            RegionShape::Box { min, max } => {
                (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledRegion {
    pub shape: RegionShape,
    pub role: RegionRole,
}

/// Scatterer cloud plus the labeled regions metrics need.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Phantom {
    pub scatterers: Vec<Scatterer>,
    pub regions: Vec<LabeledRegion>,
}

impl Phantom {
    pub fn validate(&self) -> Result<()> {
        if self.scatterers.iter().any(|s| !(s.position[2] > 0.0)) {
            return Err(RcaError::InvalidGeometry(
                "all scatterers must lie at z > 0".into(),
            ));
        }
        for region in &self.regions {
            if region.role == RegionRole::Anechoic {
                if let Some(s) = self
                    .scatterers
                    .iter()
                    .find(|s| region.shape.contains(s.position))
                {
                    return Err(RcaError::InvalidGeometry(format!(
                        "anechoic region contains a scatterer at {:?}",
                        s.position
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Minimum duration, in units of sigma_t, that keeps >= 99% of the envelope
/// energy inside the pulse support: 2 * erfinv(0.99).
pub const MIN_DURATION_SIGMAS: f64 = 3.642772735436896;

/// Gaussian-modulated sinusoid with a -6 dB amplitude bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseModel {
    pub center_frequency: f64,
    /// Two-sided -6 dB bandwidth of the Gaussian amplitude spectrum, hertz.
    pub bandwidth: f64,
    /// Support of the truncated pulse, seconds.
    pub duration: f64,
}

/// Precomputed evaluator for the hot synthesis loop.
#[derive(Debug, Clone, Copy)]
pub struct PulseEval {
    half_duration: f64,
    inv_two_sigma_sq: f64,
    two_pi_fc: f64,
}

impl PulseEval {
    /// Pulse value at time t relative to the envelope peak.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.half_duration {
            return 0.0;
        }
        (-t * t * self.inv_two_sigma_sq).exp() * (self.two_pi_fc * t).cos()
    }
}

impl PulseModel {
    /// Default duration of 8 sigma_t comfortably exceeds the 99% energy bound.
    pub fn new(center_frequency: f64, bandwidth: f64) -> Self {
        let mut model = PulseModel {
            center_frequency,
            bandwidth,
            duration: 0.0,
        };
        model.duration = 8.0 * model.sigma_t();
        model
    }

    /// Envelope standard deviation sqrt(2 ln 2) / (pi * bandwidth).
    /// 6.246354170975919e-8 s at 6 MHz.
    pub fn sigma_t(&self) -> f64 {
        (2.0 * std::f64::consts::LN_2).sqrt() / (std::f64::consts::PI * self.bandwidth)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency > 0.0) || !(self.bandwidth > 0.0) {
            return Err(RcaError::InvalidSignal(
                "pulse frequency and bandwidth must be positive".into(),
            ));
        }
        if self.duration < (MIN_DURATION_SIGMAS - 1e-12) * self.sigma_t() {
            return Err(RcaError::InvalidSignal(format!(
                "pulse duration {} s covers < 99% of the envelope energy (need >= {} s)",
                self.duration,
                MIN_DURATION_SIGMAS * self.sigma_t()
            )));
        }
        Ok(())
    }

    pub fn evaluator(&self) -> PulseEval {
        let s = self.sigma_t();
        PulseEval {
            half_duration: self.duration / 2.0,
            inv_two_sigma_sq: 1.0 / (2.0 * s * s),
            two_pi_fc: 2.0 * std::f64::consts::PI * self.center_frequency,
        }
    }

    /// Pulse value at time t relative to the envelope peak; unit peak
    /// envelope, zero phase at the peak.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluator().eval(t)
    }
}

/// Uniformly sampled pulse centered on its envelope peak (odd length).
#[derive(Debug, Clone)]
pub struct SampledPulse {
    pub samples: Vec<f64>,
    pub center_index: usize,
    pub fs: f64,
}

pub fn make_pulse(model: &PulseModel, fs: f64) -> Result<SampledPulse> {
    model.validate()?;
    if !(fs > 2.0 * (model.center_frequency + model.bandwidth / 2.0)) {
        return Err(RcaError::InvalidSignal(format!(
            "sampling rate {} Hz undersamples the pulse band edge {} Hz",
            fs,
            model.center_frequency + model.bandwidth / 2.0
        )));
    }
    let half = (model.duration / 2.0 * fs).floor() as usize;
    let eval = model.evaluator();
    let samples = (0..2 * half + 1)
        .map(|k| eval.eval((k as f64 - half as f64) / fs))
        .collect();
    Ok(SampledPulse {
        samples,
        center_index: half,
        fs,
    })
}

/// Real RF channel data, one block per transmit event. Row transmissions are
/// received on the columns and vice versa, so the channel count can differ
/// between orientations; the sample count is uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct RfEvent {
    pub event: TransmitEvent,
    pub channel_count: usize,
    /// Flat [channel][time] storage.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfDataSet {
    pub events: Vec<RfEvent>,
    /// Absolute time of sample 0, seconds.
    pub t0: f64,
    pub fs: f64,
    pub samples_per_channel: usize,
}

impl RfDataSet {
    pub fn channel(&self, event: usize, channel: usize) -> &[f64] {
        let ev = &self.events[event];
        let n = self.samples_per_channel;
        &ev.samples[channel * n..(channel + 1) * n]
    }

    pub fn total_samples(&self) -> usize {
        self.events.iter().map(|e| e.samples.len()).sum()
    }
}

/// Time window covering every echo of the phantom with a small pad. An empty
/// phantom gets a minimal window.
pub fn rf_time_window(
    geom: &ProbeGeometry,
    phantom: &Phantom,
    schedule: &TransmitSchedule,
    pulse: &PulseModel,
) -> Result<(f64, usize)> {
    if schedule.is_empty() {
        return Err(RcaError::InsufficientData("empty transmit schedule".into()));
    }
    if phantom.scatterers.is_empty() {
        return Ok((0.0, 16));
    }
    let fs = geom.sampling_frequency;
    let c = geom.sound_speed;
    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    for ev in &schedule.events {
        let rx = ev.orientation.receive();
        let count = geom.element_count(rx);
        let r_first = element_position(geom, rx, 0)?;
        let r_last = element_position(geom, rx, count - 1)?;
        for s in &phantom.scatterers {
            let (u, v) = in_plane_cross(ev.orientation, s.position);
            let z = s.position[2];
            let d_tx = tx_delay(u, z, ev.steer_angle, c);
            // Receive delay extremes occur at the nearest and farthest strip.
            let near = if v >= r_first && v <= r_last {
                0.0
            } else {
                (v - r_first).abs().min((v - r_last).abs())
            };
            let far = (v - r_first).abs().max((v - r_last).abs());
            d_min = d_min.min(d_tx + (z * z + near * near).sqrt() / c);
            d_max = d_max.max(d_tx + (z * z + far * far).sqrt() / c);
        }
    }
    let t0 = d_min - pulse.duration / 2.0 - 2.0 / fs;
    let t_end = d_max + pulse.duration / 2.0 + 2.0 / fs;
    let n = ((t_end - t0) * fs).ceil() as usize + 1;
    Ok((t0, n))
}

fn in_plane_cross(orientation: Orientation, p: [f64; 3]) -> (f64, f64) {
    match orientation {
        Orientation::RowTx => (p[0], p[1]),
        Orientation::ColumnTx => (p[1], p[0]),
    }
}

/// Synthesize channel data over an automatically sized time window.
pub fn simulate_rf(
    geom: &ProbeGeometry,
    phantom: &Phantom,
    schedule: &TransmitSchedule,
    pulse: &PulseModel,
    tx_apod_alpha: f64,
) -> Result<RfDataSet> {
    let (t0, n_samples) = rf_time_window(geom, phantom, schedule, pulse)?;
    simulate_rf_with_window(geom, phantom, schedule, pulse, tx_apod_alpha, t0, n_samples)
}

/// Synthesize channel data over a caller-chosen window. Scatterers are
/// accumulated in phantom order per channel, so the output is bit-identical
/// regardless of worker count.
pub fn simulate_rf_with_window(
    geom: &ProbeGeometry,
    phantom: &Phantom,
    schedule: &TransmitSchedule,
    pulse: &PulseModel,
    tx_apod_alpha: f64,
    t0: f64,
    n_samples: usize,
) -> Result<RfDataSet> {
    geom.validate()?;
    phantom.validate()?;
    pulse.validate()?;
    if schedule.is_empty() {
        return Err(RcaError::InsufficientData("empty transmit schedule".into()));
    }
    if !(geom.sampling_frequency > 2.0 * (pulse.center_frequency + pulse.bandwidth / 2.0)) {
        return Err(RcaError::InvalidSignal(format!(
            "sampling rate {} Hz undersamples the pulse band",
            geom.sampling_frequency
        )));
    }
    if n_samples == 0 {
        return Err(RcaError::InsufficientData("empty time window".into()));
    }
    let tx_window_rows = tukey_window(geom.num_rows, tx_apod_alpha)?;
    let tx_window_cols = tukey_window(geom.num_cols, tx_apod_alpha)?;
    let fs = geom.sampling_frequency;
    let c = geom.sound_speed;
    let eval = pulse.evaluator();
    let half_dur = pulse.duration / 2.0;

    let jobs: Vec<(usize, usize)> = schedule
        .events
        .iter()
        .enumerate()
        .flat_map(|(e, ev)| {
            (0..geom.element_count(ev.orientation.receive())).map(move |n| (e, n))
        })
        .collect();

    let channels: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(e, n)| {
            let ev = &schedule.events[e];
            let tx_window = match ev.orientation {
                Orientation::RowTx => &tx_window_rows,
                Orientation::ColumnTx => &tx_window_cols,
            };
            let r_n = element_position(geom, ev.orientation.receive(), n)
                .expect("receive index within element count");
            let (sin_t, cos_t) = ev.steer_angle.sin_cos();
            let mut out = vec![0.0f64; n_samples];
            for s in &phantom.scatterers {
                let (u, v) = in_plane_cross(ev.orientation, s.position);
                let w_tx = window_weight_at(tx_window, geom.pitch, u);
                if w_tx == 0.0 {
                    continue;
                }
                let z = s.position[2];
                let d_tx = (z * cos_t + u * sin_t) / c;
                let dv = v - r_n;
                let dist = (z * z + dv * dv).sqrt();
                let d_tot = d_tx + dist / c;
                let amp = s.amplitude * w_tx / dist;
                let k_lo = (((d_tot - half_dur - t0) * fs).ceil()).max(0.0) as usize;
                let k_hi = ((d_tot + half_dur - t0) * fs).floor();
                if k_hi < 0.0 {
                    continue;
                }
                let k_hi = (k_hi as usize).min(n_samples - 1);
                for k in k_lo..=k_hi {
                    let t = t0 + k as f64 / fs - d_tot;
                    out[k] += amp * eval.eval(t);
                }
            }
            out
        })
        .collect();

    let mut channels = channels.into_iter();
    let events = schedule
        .events
        .iter()
        .map(|&event| {
            let channel_count = geom.element_count(event.orientation.receive());
            let mut samples = Vec::with_capacity(channel_count * n_samples);
            for _ in 0..channel_count {
                samples.extend_from_slice(&channels.next().expect("job per channel"));
            }
            RfEvent {
                event,
                channel_count,
                samples,
            }
        })
        .collect();

    Ok(RfDataSet {
        events,
        t0,
        fs,
        samples_per_channel: n_samples,
    })
}

/// Add white Gaussian noise at a target SNR. The noise power is the mean
/// signal power divided by 10^(snr_db/10); samples are drawn in a fixed
/// single-threaded order so a seed fully determines the output.
pub fn add_noise(rf: &RfDataSet, snr_db: f64, seed: u64) -> Result<RfDataSet> {
    let total: f64 = rf
        .events
        .iter()
        .flat_map(|e| e.samples.iter())
        .map(|&x| x * x)
        .sum();
    let count = rf.total_samples();
    if count == 0 || total == 0.0 {
        return Err(RcaError::InsufficientData(
            "cannot set an SNR on all-zero data".into(),
        ));
    }
    let signal_power = total / count as f64;
    let sigma = (signal_power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = rf.clone();
    for ev in out.events.iter_mut() {
        for x in ev.samples.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *x += sigma * n;
        }
    }
    Ok(out)
}

/// Unit scatterers on the probe axis, one per depth.
pub fn make_point_phantom(depths: &[f64]) -> Phantom {
    Phantom {
        scatterers: depths
            .iter()
            .map(|&z| Scatterer {
                position: [0.0, 0.0, z],
                amplitude: 1.0,
            })
            .collect(),
        regions: Vec::new(),
    }
}

/// Cyst phantom layout: pairs of tubes along y (one highly scattering, one
/// anechoic) at each listed depth, inside a speckle-filled box.
#[derive(Debug, Clone, PartialEq)]
pub struct CystPhantomSpec {
    pub bounds_min: [f64; 3],
    pub bounds_max: [f64; 3],
    pub tube_radius: f64,
    pub tube_depths: Vec<f64>,
    /// Lateral center of the highly scattering tubes.
    pub bright_x: f64,
    /// Lateral center of the anechoic tubes.
    pub anechoic_x: f64,
    /// Lateral center of the plain-speckle strip used as the contrast
    /// reference when scoring the bright tubes.
    pub background_x: f64,
    /// Lateral center of the plain-speckle strip used as the tissue level
    /// when scoring the anechoic tubes.
    pub tissue_x: f64,
    /// Scatterer amplitude inside the bright tubes.
    pub amplitude_multiplier: f64,
    /// Resolution cell volume defining the speckle density unit, m^3.
    pub resolution_cell_volume: f64,
}

/// Nominal resolution cell (lateral (lambda*z/aperture))^2 x axial c/(2*bw)
/// at a representative depth; defines "scatterers per resolution cell".
pub fn resolution_cell_volume(geom: &ProbeGeometry, depth: f64) -> f64 {
    let aperture = geom
        .aperture(Orientation::RowTx)
        .min(geom.aperture(Orientation::ColumnTx));
    let lateral = geom.wavelength() * depth / aperture;
    let axial = geom.sound_speed / (2.0 * geom.bandwidth);
    lateral * lateral * axial
}

impl CystPhantomSpec {
    /// Two tube pairs at 14 and 23 mm depth in a 20.4 x 4.8 x 18 mm box.
    ///
    /// The bright tube sits on the probe axis where every steered
    /// transmission insonifies it; the anechoic tube and the two speckle
    /// reference strips sit off-axis in the zone where the compounded
    /// transmit pattern of a 2.5-degree-step plane-wave sequence leaves
    /// its strongest side-lobe structure, which is what the contrast
    /// metrics are designed to probe.
    pub fn desk_default(geom: &ProbeGeometry) -> Self {
        CystPhantomSpec {
            bounds_min: [-10.2e-3, -2.4e-3, 10.0e-3],
            bounds_max: [10.2e-3, 2.4e-3, 28.0e-3],
            tube_radius: 1.9e-3,
            tube_depths: vec![14.0e-3, 23.0e-3],
            bright_x: 0.0,
            anechoic_x: 6.0e-3,
            background_x: -6.9e-3,
            tissue_x: -3.6e-3,
            amplitude_multiplier: 30.0,
            resolution_cell_volume: resolution_cell_volume(geom, 19.0e-3),
        }
    }

    fn tubes(&self) -> Vec<LabeledRegion> {
        let mut tubes = Vec::new();
        for &depth in &self.tube_depths {
            for (x, role) in [
                (self.bright_x, RegionRole::HighScatter),
                (self.anechoic_x, RegionRole::Anechoic),
            ] {
                tubes.push(LabeledRegion {
                    shape: RegionShape::TubeAlongY {
                        center_x: x,
                        center_z: depth,
                        radius: self.tube_radius,
                        y_min: self.bounds_min[1],
                        y_max: self.bounds_max[1],
                    },
                    role,
                });
            }
        }
        tubes
    }

    pub fn validate(&self) -> Result<()> {
        if (0..3).any(|a| !(self.bounds_max[a] > self.bounds_min[a])) {
            return Err(RcaError::InvalidGeometry("empty phantom bounds".into()));
        }
        if !(self.bounds_min[2] > 0.0) {
            return Err(RcaError::InvalidGeometry("phantom must lie at z > 0".into()));
        }
        if !(self.tube_radius > 0.0) || !(self.resolution_cell_volume > 0.0) {
            return Err(RcaError::InvalidGeometry(
                "tube radius and resolution cell must be positive".into(),
            ));
        }
        if self.amplitude_multiplier <= 1.0 {
            return Err(RcaError::InvalidGeometry(
                "high-scatter amplitude multiplier must exceed 1".into(),
            ));
        }
        for (name, x) in [
            ("background", self.background_x),
            ("tissue", self.tissue_x),
        ] {
            if !(self.bounds_min[0] < x && x < self.bounds_max[0]) {
                return Err(RcaError::InvalidGeometry(format!(
                    "{} reference strip at x = {} m leaves the phantom bounds",
                    name, x
                )));
            }
        }
        let tubes = self.tubes();
        for (i, a) in tubes.iter().enumerate() {
            let RegionShape::TubeAlongY {
                center_x: ax,
                center_z: az,
                radius: ar,
                ..
            } = a.shape
            else {
                continue;
            };
            if ax - ar < self.bounds_min[0]
                || ax + ar > self.bounds_max[0]
                || az - ar < self.bounds_min[2]
                || az + ar > self.bounds_max[2]
            {
                return Err(RcaError::InvalidGeometry(format!(
                    "tube at x = {} m, z = {} m leaves the phantom bounds",
                    ax, az
                )));
            }
            for b in tubes.iter().skip(i + 1) {
                let RegionShape::TubeAlongY {
                    center_x: bx,
                    center_z: bz,
                    radius: br,
                    ..
                } = b.shape
                else {
                    continue;
                };
                if f64::hypot(ax - bx, az - bz) < ar + br {
                    return Err(RcaError::InvalidGeometry(format!(
                        "tubes at (x, z) = ({}, {}) and ({}, {}) overlap",
                        ax, az, bx, bz
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generate the speckle phantom: `round(density * cells)` uniformly random
/// scatterers, rejection-resampled so none land in an anechoic tube; bright
/// tubes keep the background number density with amplified amplitude.
pub fn make_cyst_phantom(spec: &CystPhantomSpec, density: f64, seed: u64) -> Result<Phantom> {
    spec.validate()?;
    if density < 5.0 {
        return Err(RcaError::InvalidGeometry(format!(
            "speckle density {} below 5 per resolution cell (underdeveloped speckle)",
            density
        )));
    }
    let volume: f64 = (0..3)
        .map(|a| spec.bounds_max[a] - spec.bounds_min[a])
        .product();
    let cells = volume / spec.resolution_cell_volume;
    let target = (density * cells).round() as usize;
    let tubes = spec.tubes();
    let anechoic: Vec<&LabeledRegion> = tubes
        .iter()
        .filter(|t| t.role == RegionRole::Anechoic)
        .collect();
    let bright: Vec<&LabeledRegion> = tubes
        .iter()
        .filter(|t| t.role == RegionRole::HighScatter)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scatterers = Vec::with_capacity(target);
    while scatterers.len() < target {
        let p = [
            rng.gen_range(spec.bounds_min[0]..spec.bounds_max[0]),
            rng.gen_range(spec.bounds_min[1]..spec.bounds_max[1]),
            rng.gen_range(spec.bounds_min[2]..spec.bounds_max[2]),
        ];
        if anechoic.iter().any(|t| t.shape.contains(p)) {
            continue;
        }
        let amplitude = if bright.iter().any(|t| t.shape.contains(p)) {
            spec.amplitude_multiplier
        } else {
            1.0
        };
        scatterers.push(Scatterer {
            position: p,
            amplitude,
        });
    }

    let mut regions = tubes;
    regions.push(LabeledRegion {
        shape: RegionShape::Box {
            min: spec.bounds_min,
            max: spec.bounds_max,
        },
        role: RegionRole::Background,
    });
    Ok(Phantom {
        scatterers,
        regions,
    })
}
