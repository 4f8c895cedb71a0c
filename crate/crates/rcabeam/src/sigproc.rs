//! IQ demodulation, low-pass filter design, and delayed-sample extraction.
//!
//! Demodulation mixes the RF by exp(-i*2*pi*f_c*t) with t the absolute sample
//! time (t0 + k/f_s), applies a zero-phase FIR low-pass, and decimates. The
//! dataset keeps its carrier so the beamformer's phase compensation is
//! self-consistent.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{RcaError, Result};
use crate::geometry::{ProbeGeometry, TransmitEvent};
use crate::synth::{RfDataSet, RfEvent};

/// Complex baseband channel data, one block per transmit event.
#[derive(Debug, Clone)]
pub struct IqEvent {
    pub event: TransmitEvent,
    pub channel_count: usize,
    /// Flat [channel][time] storage.
    pub samples: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct IqDataSet {
    pub events: Vec<IqEvent>,
    /// Absolute time of sample 0, seconds.
    pub t0: f64,
    /// Baseband sampling rate (RF rate / decimation), hertz.
    pub fs: f64,
    /// Carrier used for demodulation, hertz.
    pub carrier: f64,
    pub samples_per_channel: usize,
}

impl IqDataSet {
    pub fn channel(&self, event: usize, channel: usize) -> &[Complex64] {
        let ev = &self.events[event];
        let n = self.samples_per_channel;
        &ev.samples[channel * n..(channel + 1) * n]
    }
}

/// Demodulation parameters. Defaults follow the probe band: cutoff =
/// bandwidth/2, transition width = cutoff, decimation x2.
#[derive(Debug, Clone, PartialEq)]
pub struct IqParams {
    /// Low-pass cutoff (-6 dB point), hertz.
    pub cutoff: f64,
    /// Filter transition width, hertz.
    pub transition: f64,
    /// Keep every n-th sample after filtering.
    pub decimation: usize,
}

impl IqParams {
    pub fn for_probe(geom: &ProbeGeometry) -> Self {
        IqParams {
            cutoff: geom.bandwidth / 2.0,
            transition: geom.bandwidth / 2.0,
            decimation: 2,
        }
    }
}

/// Blackman windowed-sinc low-pass: linear phase, -6 dB at `cutoff`,
/// stopband below -60 dB, unit DC gain. Tap count grows as the transition
/// width shrinks (about 5.5 * f_s / transition).
pub fn design_lowpass(cutoff: f64, fs: f64, transition: f64) -> Result<Vec<f64>> {
    if !(cutoff > 0.0) || cutoff >= fs / 2.0 {
        return Err(RcaError::InvalidSignal(format!(
            "cutoff {} Hz outside (0, {}) Hz",
            cutoff,
            fs / 2.0
        )));
    }
    if !(transition > 0.0) {
        return Err(RcaError::InvalidSignal(
            "transition width must be positive".into(),
        ));
    }
    if cutoff + transition / 2.0 >= fs / 2.0 {
        return Err(RcaError::InvalidSignal(format!(
            "stopband edge {} Hz reaches Nyquist {} Hz",
            cutoff + transition / 2.0,
            fs / 2.0
        )));
    }
    let mut len = (5.5 * fs / transition).ceil() as usize;
    if len % 2 == 0 {
        len += 1;
    }
    if len > 200_001 {
        return Err(RcaError::InvalidSignal(format!(
            "transition width {} Hz needs {} taps; refusing",
            transition, len
        )));
    }
    let mid = (len - 1) / 2;
    let fc = cutoff / fs;
    let mut taps = vec![0.0f64; len];
    for k in 0..=mid {
        let m = k as f64 - mid as f64;
        let ideal = if m == 0.0 {
            2.0 * fc
        } else {
            (2.0 * std::f64::consts::PI * fc * m).sin() / (std::f64::consts::PI * m)
        };
        let u = k as f64 / (len - 1) as f64;
        let window = 0.42 - 0.5 * (2.0 * std::f64::consts::PI * u).cos()
            + 0.08 * (4.0 * std::f64::consts::PI * u).cos();
        taps[k] = ideal * window;
        taps[len - 1 - k] = taps[k];
    }
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    Ok(taps)
}

/// Complex frequency response of an FIR at one frequency.
pub fn frequency_response(taps: &[f64], f: f64, fs: f64) -> Complex64 {
    let w = -2.0 * std::f64::consts::PI * f / fs;
    taps.iter()
        .enumerate()
        .map(|(k, &h)| h * Complex64::from_polar(1.0, w * k as f64))
        .sum()
}

/// Mix to baseband, low-pass, and decimate. Sample 0 is kept, so t0 is
/// unchanged and the output rate is f_s / decimation.
pub fn iq_demodulate(rf: &RfDataSet, carrier: f64, params: &IqParams) -> Result<IqDataSet> {
    if params.decimation < 1 {
        return Err(RcaError::InvalidSignal("decimation must be >= 1".into()));
    }
    let out_fs = rf.fs / params.decimation as f64;
    if params.cutoff > out_fs / 2.0 {
        return Err(RcaError::InvalidSignal(format!(
            "cutoff {} Hz exceeds decimated Nyquist {} Hz",
            params.cutoff,
            out_fs / 2.0
        )));
    }
    let taps = design_lowpass(params.cutoff, rf.fs, params.transition)?;
    let mid = (taps.len() - 1) / 2;
    let n_in = rf.samples_per_channel;
    let n_out = n_in.div_ceil(params.decimation);
    let two_pi_fc = 2.0 * std::f64::consts::PI * carrier;

    let events: Vec<IqEvent> = rf
        .events
        .par_iter()
        .map(|ev| {
            let mut samples = Vec::with_capacity(ev.channel_count * n_out);
            for ch in 0..ev.channel_count {
                let x = &ev.samples[ch * n_in..(ch + 1) * n_in];
                // Mix by exp(-i*2*pi*f_c*(t0 + k/fs)) at the RF rate.
                let mixed: Vec<Complex64> = x
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let t = rf.t0 + k as f64 / rf.fs;
                        v * Complex64::from_polar(1.0, -two_pi_fc * t)
                    })
                    .collect();
                // Zero-phase FIR (group delay compensated), computed only at
                // the decimated output instants; edges are zero-padded.
                for out_idx in 0..n_out {
                    let k = out_idx * params.decimation;
                    let lo = mid.saturating_sub(k);
                    let hi = taps.len().min(n_in + mid - k);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in lo..hi {
                        acc += taps[m] * mixed[k + m - mid];
                    }
                    samples.push(acc);
                }
            }
            IqEvent {
                event: ev.event,
                channel_count: ev.channel_count,
                samples,
            }
        })
        .collect();

    Ok(IqDataSet {
        events,
        t0: rf.t0,
        fs: out_fs,
        carrier,
        samples_per_channel: n_out,
    })
}

/// Reconstruct band-limited RF on the baseband grid:
/// 2 * Re(y(t) * exp(+i*2*pi*f_c*t)).
pub fn remodulate(iq: &IqDataSet) -> RfDataSet {
    let two_pi_fc = 2.0 * std::f64::consts::PI * iq.carrier;
    let n = iq.samples_per_channel;
    let events = iq
        .events
        .iter()
        .map(|ev| {
            let samples = ev
                .samples
                .iter()
                .enumerate()
                .map(|(idx, &z)| {
                    let k = idx % n;
                    let t = iq.t0 + k as f64 / iq.fs;
                    2.0 * (z * Complex64::from_polar(1.0, two_pi_fc * t)).re
                })
                .collect();
            RfEvent {
                event: ev.event,
                channel_count: ev.channel_count,
                samples,
            }
        })
        .collect();
    RfDataSet {
        events,
        t0: iq.t0,
        fs: iq.fs,
        samples_per_channel: n,
    }
}

/// Linearly interpolated complex sample at an absolute time. Returns the
/// stored sample when the delay lands on the grid (within 1e-6 samples) and
/// zero outside the recorded window; never fails.
pub fn sample_at(iq: &IqDataSet, event: usize, channel: usize, delay: f64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let Some(ev) = iq.events.get(event) else {
        return zero;
    };
    if channel >= ev.channel_count {
        return zero;
    }
    let n = iq.samples_per_channel;
    let u = (delay - iq.t0) * iq.fs;
    if u.is_nan() {
        return zero;
    }
    let data = &ev.samples[channel * n..(channel + 1) * n];
    let r = u.round();
    if (u - r).abs() < 1e-6 {
        if r < 0.0 || r > (n - 1) as f64 {
            return zero;
        }
        return data[r as usize];
    }
    if u < 0.0 || u > (n - 1) as f64 {
        return zero;
    }
    let i = u.floor() as usize;
    let f = u - i as f64;
    data[i] * (1.0 - f) + data[i + 1] * f
}
