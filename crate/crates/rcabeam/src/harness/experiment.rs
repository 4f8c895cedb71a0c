//! End-to-end experiment execution: synthesis, demodulation, per-transmit
//! beamforming, compounding per requested method, and metric extraction.

use std::time::Instant;

use crate::beamform::{das_volumes, PerTxVolume};
use crate::compound::{
    coherent_compound, fmas, log_compress, rc_fmas, DbVolume, EnvelopeVolume, Method, PairMode,
};
use crate::error::{RcaError, Result};
use crate::geometry::VoxelGrid;
use crate::metrics::{
    find_peak, fwhm, peak_mask_from_fwhm, pir, pmslr, subregion_db_ratio, MetricsReport,
    PeakMask, RoiBox, RoiRole,
};
use crate::geometry::Axis;
use crate::sigproc::{iq_demodulate, IqParams};
use crate::synth::{
    add_noise, make_cyst_phantom, make_point_phantom, simulate_rf, CystPhantomSpec, Phantom,
    PulseModel,
};

use super::config::{config_hash, substream_seed, ExperimentConfig, PhantomSection};

/// Everything produced for one compounding method.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub method: Method,
    pub envelope: EnvelopeVolume,
    pub db: DbVolume,
    pub reports: Vec<MetricsReport>,
    /// Wall time of the compounding stage alone, seconds.
    pub compound_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub per_method: Vec<MethodOutput>,
    pub config_hash: String,
    pub grid: VoxelGrid,
}

/// Contrast/noise ROI boxes at one tube depth. Half-extents are tied to the
/// tube radius so the in-tube boxes stay inside the tubes with margin: the
/// lateral and axial corners satisfy sqrt(0.84^2 + 0.25^2) = 0.88 < 1. The
/// axial half-extent is kept tight (0.25 radius) because a plane-wave
/// transmit concentrates the tube response within a pulse length of the
/// tube axis; a taller box would mostly average in plain speckle.
///
/// Contrast is scored against the background strip and the anechoic tube
/// against the tissue strip, each a plain-speckle box at the same depth at
/// the lateral stations carried by the phantom spec.
pub fn cyst_rois(spec: &CystPhantomSpec, depth: f64) -> (RoiBox, RoiBox, RoiBox, RoiBox) {
    let y_half = 0.8 * (spec.bounds_max[1] - spec.bounds_min[1]) / 2.0;
    let half = [0.84 * spec.tube_radius, y_half, 0.25 * spec.tube_radius];
    let bright = RoiBox {
        center: [spec.bright_x, 0.0, depth],
        half_extents: half,
        role: RoiRole::Tissue1,
    };
    let background = RoiBox {
        center: [spec.background_x, 0.0, depth],
        half_extents: half,
        role: RoiRole::Tissue2,
    };
    let tissue = RoiBox {
        center: [spec.tissue_x, 0.0, depth],
        half_extents: half,
        role: RoiRole::Tissue,
    };
    let noise = RoiBox {
        center: [spec.anechoic_x, 0.0, depth],
        half_extents: half,
        role: RoiRole::Noise,
    };
    (bright, background, tissue, noise)
}

fn build_phantom(config: &ExperimentConfig) -> Result<(Phantom, Option<CystPhantomSpec>)> {
    match &config.phantom {
        PhantomSection::Point { depths_mm } => {
            let depths: Vec<f64> = depths_mm.iter().map(|d| d * 1e-3).collect();
            Ok((make_point_phantom(&depths), None))
        }
        PhantomSection::Cyst { density, .. } => {
            let spec = config
                .phantom
                .to_cyst_spec(&config.probe.to_probe())
                .expect("cyst section");
            let phantom = make_cyst_phantom(
                &spec,
                *density,
                substream_seed(config.run.seed, "phantom"),
            )?;
            Ok((phantom, Some(spec)))
        }
    }
}

fn compound_one(
    per_tx: &[PerTxVolume],
    method: Method,
) -> Result<(EnvelopeVolume, f64)> {
    let start = Instant::now();
    let env = match method {
        Method::Das => coherent_compound(per_tx)?,
        Method::Fmas => fmas(per_tx, PairMode::ComplexBaseband)?,
        Method::RcFmas => rc_fmas(per_tx, PairMode::ComplexBaseband)?,
    };
    Ok((env, start.elapsed().as_secs_f64()))
}

fn point_report(
    env: &EnvelopeVolume,
    mask: &PeakMask,
    method: Method,
) -> Result<MetricsReport> {
    let peak = find_peak(env)?;
    Ok(MetricsReport {
        fwhm_x: Some(fwhm(env, Axis::X)?),
        fwhm_y: Some(fwhm(env, Axis::Y)?),
        fwhm_z: Some(fwhm(env, Axis::Z)?),
        pir: Some(pir(env, mask)?),
        pmslr_db: Some(pmslr(env, mask)?),
        ..MetricsReport::empty(method, peak.position[2])
    })
}

fn cyst_reports(
    env: &EnvelopeVolume,
    spec: &CystPhantomSpec,
    method: Method,
) -> Result<Vec<MetricsReport>> {
    spec.tube_depths
        .iter()
        .map(|&depth| {
            let (bright, background, tissue, noise) = cyst_rois(spec, depth);
            let (tcr_db, tcr_se_db) = subregion_db_ratio(env, &bright, &background, 4)?;
            let (tnr_db, tnr_se_db) = subregion_db_ratio(env, &tissue, &noise, 4)?;
            Ok(MetricsReport {
                tcr_db: Some(tcr_db),
                tcr_se_db: Some(tcr_se_db),
                tnr_db: Some(tnr_db),
                tnr_se_db: Some(tnr_se_db),
                ..MetricsReport::empty(method, depth)
            })
        })
        .collect()
}

/// Run the full pipeline for one configuration. Deterministic per seed: the
/// same config produces bit-identical volumes regardless of worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let geom = config.probe.to_probe();
    let schedule = config.schedule.to_schedule()?;
    let grid = config.grid.to_grid();
    let methods = config.methods()?;
    let pulse = PulseModel::new(geom.center_frequency, geom.bandwidth);
    let (phantom, cyst_spec) = build_phantom(config)?;

    let mut rf = simulate_rf(&geom, &phantom, &schedule, &pulse, config.run.tx_apod_alpha)?;
    if let Some(noise) = &config.noise {
        rf = add_noise(&rf, noise.snr_db, substream_seed(config.run.seed, "noise"))?;
    }
    let iq = iq_demodulate(&rf, geom.center_frequency, &IqParams::for_probe(&geom))?;
    let per_tx = das_volumes(&iq, &grid, &geom, config.run.rx_apod_alpha)?;

    // For point targets the main-lobe mask is measured once, on the
    // coherently compounded volume, and reused for every method so the
    // bounding volume stays constant across comparisons.
    let das_mask = match cyst_spec {
        None => {
            let das_env = coherent_compound(&per_tx)?;
            Some(peak_mask_from_fwhm(&das_env)?)
        }
        Some(_) => None,
    };

    let mut per_method = Vec::with_capacity(methods.len());
    for method in methods {
        let (envelope, compound_seconds) = compound_one(&per_tx, method)?;
        let db = log_compress(&envelope, config.run.dynamic_range_db)?;
        let reports = match (&cyst_spec, &das_mask) {
            (Some(spec), _) => cyst_reports(&envelope, spec, method)?,
            (None, Some(mask)) => vec![point_report(&envelope, mask, method)?],
            (None, None) => {
                return Err(RcaError::Config("no metric context".into()));
            }
        };
        per_method.push(MethodOutput {
            method,
            envelope,
            db,
            reports,
            compound_seconds,
        });
    }

    Ok(ExperimentOutput {
        per_method,
        config_hash: config_hash(config)?,
        grid,
    })
}
