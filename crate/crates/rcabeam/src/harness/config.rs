//! Experiment configuration: a TOML-backed description of probe, schedule,
//! phantom, grid, noise, and run options, with converters into the domain
//! types and a canonical hash for provenance tracking.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compound::Method;
use crate::error::{RcaError, Result};
use crate::geometry::{make_schedule, ProbeGeometry, TransmitSchedule, VoxelGrid};
use crate::synth::{CystPhantomSpec, resolution_cell_volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSection {
    pub num_rows: usize,
    pub num_cols: usize,
    pub pitch_mm: f64,
    pub center_frequency_mhz: f64,
    pub bandwidth_mhz: f64,
    pub sampling_frequency_mhz: f64,
    pub sound_speed_m_s: f64,
}

impl ProbeSection {
    pub fn to_probe(&self) -> ProbeGeometry {
        let pitch = self.pitch_mm * 1e-3;
        ProbeGeometry {
            num_rows: self.num_rows,
            num_cols: self.num_cols,
            pitch,
            element_length: self.num_rows.max(self.num_cols) as f64 * pitch,
            center_frequency: self.center_frequency_mhz * 1e6,
            bandwidth: self.bandwidth_mhz * 1e6,
            sampling_frequency: self.sampling_frequency_mhz * 1e6,
            sound_speed: self.sound_speed_m_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSection {
    /// Total transmissions, split evenly between row and column firings.
    pub angles_total: usize,
    pub range_deg: f64,
}

impl ScheduleSection {
    pub fn to_schedule(&self) -> Result<TransmitSchedule> {
        if self.angles_total < 2 || self.angles_total % 2 != 0 {
            return Err(RcaError::Config(format!(
                "angles_total must be an even count >= 2 (half per orientation), got {}",
                self.angles_total
            )));
        }
        make_schedule(self.angles_total / 2, self.range_deg.to_radians())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomSection {
    /// On-axis unit point scatterers.
    Point { depths_mm: Vec<f64> },
    /// Speckle box with bright/anechoic tube pairs.
    Cyst {
        density: f64,
        #[serde(default)]
        bounds_min_mm: Option<[f64; 3]>,
        #[serde(default)]
        bounds_max_mm: Option<[f64; 3]>,
        #[serde(default)]
        tube_radius_mm: Option<f64>,
        #[serde(default)]
        tube_depths_mm: Option<Vec<f64>>,
        #[serde(default)]
        bright_x_mm: Option<f64>,
        #[serde(default)]
        anechoic_x_mm: Option<f64>,
        #[serde(default)]
        background_x_mm: Option<f64>,
        #[serde(default)]
        tissue_x_mm: Option<f64>,
        #[serde(default)]
        amplitude_multiplier: Option<f64>,
    },
}

impl PhantomSection {
    /// Cyst spec with per-field overrides on top of the probe-derived default.
    pub fn to_cyst_spec(&self, geom: &ProbeGeometry) -> Option<CystPhantomSpec> {
        let PhantomSection::Cyst {
            bounds_min_mm,
            bounds_max_mm,
            tube_radius_mm,
            tube_depths_mm,
            bright_x_mm,
            anechoic_x_mm,
            background_x_mm,
            tissue_x_mm,
            amplitude_multiplier,
            ..
        } = self
        else {
            return None;
        };
        let mut spec = CystPhantomSpec::desk_default(geom);
        let mm = |v: [f64; 3]| [v[0] * 1e-3, v[1] * 1e-3, v[2] * 1e-3];
        if let Some(v) = bounds_min_mm {
            spec.bounds_min = mm(*v);
        }
        if let Some(v) = bounds_max_mm {
            spec.bounds_max = mm(*v);
        }
        if let Some(r) = tube_radius_mm {
            spec.tube_radius = r * 1e-3;
        }
        if let Some(d) = tube_depths_mm {
            spec.tube_depths = d.iter().map(|z| z * 1e-3).collect();
        }
        if let Some(x) = bright_x_mm {
            spec.bright_x = x * 1e-3;
        }
        if let Some(x) = anechoic_x_mm {
            spec.anechoic_x = x * 1e-3;
        }
        if let Some(x) = background_x_mm {
            spec.background_x = x * 1e-3;
        }
        if let Some(x) = tissue_x_mm {
            spec.tissue_x = x * 1e-3;
        }
        if let Some(m) = amplitude_multiplier {
            spec.amplitude_multiplier = *m;
        }
        // Keep the density unit tied to the configured probe and the
        // (possibly overridden) depth span.
        let mid = (spec.bounds_min[2] + spec.bounds_max[2]) / 2.0;
        spec.resolution_cell_volume = resolution_cell_volume(geom, mid);
        Some(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub center_mm: [f64; 3],
    pub spacing_mm: [f64; 3],
    pub dims: [usize; 3],
}

impl GridSection {
    pub fn to_grid(&self) -> VoxelGrid {
        VoxelGrid::centered(
            [
                self.center_mm[0] * 1e-3,
                self.center_mm[1] * 1e-3,
                self.center_mm[2] * 1e-3,
            ],
            [
                self.spacing_mm[0] * 1e-3,
                self.spacing_mm[1] * 1e-3,
                self.spacing_mm[2] * 1e-3,
            ],
            self.dims,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSection {
    pub snr_db: f64,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_dynamic_range() -> f64 {
    60.0
}

fn default_methods() -> Vec<String> {
    Method::all().iter().map(|m| m.as_str().into()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_alpha")]
    pub tx_apod_alpha: f64,
    #[serde(default = "default_alpha")]
    pub rx_apod_alpha: f64,
    #[serde(default = "default_dynamic_range")]
    pub dynamic_range_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub probe: ProbeSection,
    pub schedule: ScheduleSection,
    pub phantom: PhantomSection,
    pub grid: GridSection,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RcaError::Config(format!("config parse error: {}", e)))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RcaError::Config(format!("config encode error: {}", e)))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            RcaError::Config(format!("cannot read config {}: {}", path.display(), e))
        })?;
        Self::from_toml(&text)
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        if self.run.methods.is_empty() {
            return Err(RcaError::Config("no methods requested".into()));
        }
        self.run.methods.iter().map(|m| m.parse()).collect()
    }

    /// Check every section against the module preconditions before any
    /// compute starts.
    pub fn validate(&self) -> Result<()> {
        let geom = self.probe.to_probe();
        geom.validate()?;
        self.schedule.to_schedule()?;
        let grid = self.grid.to_grid();
        grid.validate()?;
        self.methods()?;
        for alpha in [self.run.tx_apod_alpha, self.run.rx_apod_alpha] {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(RcaError::Config(format!(
                    "apodization alpha {} outside [0, 1]",
                    alpha
                )));
            }
        }
        if !(self.run.dynamic_range_db > 0.0) {
            return Err(RcaError::Config("dynamic range must be positive".into()));
        }
        match &self.phantom {
            PhantomSection::Point { depths_mm } => {
                if depths_mm.is_empty() {
                    return Err(RcaError::Config("point phantom needs depths".into()));
                }
                if depths_mm.iter().any(|&d| !(d > 0.0)) {
                    return Err(RcaError::Config("point depths must be positive".into()));
                }
            }
            PhantomSection::Cyst { density, .. } => {
                if *density < 5.0 {
                    return Err(RcaError::Config(format!(
                        "speckle density {} below 5 per resolution cell",
                        density
                    )));
                }
                self.phantom
                    .to_cyst_spec(&geom)
                    .expect("cyst section")
                    .validate()?;
            }
        }
        Ok(())
    }

    /// Desk-scale point-target run: 32+32 probe, 10 transmissions over 10
    /// degrees, 48^3 grid around a 50 mm scatterer.
    ///
    /// The desk probe keeps the channel count small but preserves the
    /// full-scale f-number at the 50 mm target (wider pitch), so the
    /// side-lobe and peak-energy orderings between the compounding methods
    /// survive the scale-down. The lateral field of view stops where the
    /// recording window truncates the single-transmission ridge artifacts.
    pub fn desk_psf_default() -> Self {
        ExperimentConfig {
            probe: ProbeSection {
                num_rows: 32,
                num_cols: 32,
                pitch_mm: 0.9,
                center_frequency_mhz: 5.0,
                bandwidth_mhz: 3.0,
                sampling_frequency_mhz: 40.0,
                sound_speed_m_s: 1540.0,
            },
            schedule: ScheduleSection {
                angles_total: 10,
                range_deg: 10.0,
            },
            phantom: PhantomSection::Point {
                depths_mm: vec![50.0],
            },
            grid: GridSection {
                center_mm: [0.0, 0.0, 50.0],
                spacing_mm: [0.3, 0.3, 0.1],
                dims: [48, 48, 48],
            },
            noise: Some(NoiseSection { snr_db: 20.0 }),
            run: RunSection {
                seed: 7,
                methods: default_methods(),
                tx_apod_alpha: 0.5,
                rx_apod_alpha: 1.0,
                dynamic_range_db: 60.0,
            },
        }
    }

    /// Desk-scale cyst run: tube pairs at 14 and 23 mm inside a speckle box.
    ///
    /// The cyst targets sit shallow with a wide lateral field of view, so the
    /// probe keeps the fine full-scale pitch: a coarse pitch would fold
    /// receive grating copies of the speckle into the anechoic tubes.
    pub fn desk_cyst_default() -> Self {
        ExperimentConfig {
            probe: ProbeSection {
                num_rows: 32,
                num_cols: 32,
                pitch_mm: 0.2,
                center_frequency_mhz: 5.0,
                bandwidth_mhz: 3.0,
                sampling_frequency_mhz: 40.0,
                sound_speed_m_s: 1540.0,
            },
            phantom: PhantomSection::Cyst {
                density: 10.0,
                bounds_min_mm: None,
                bounds_max_mm: None,
                tube_radius_mm: None,
                tube_depths_mm: None,
                bright_x_mm: None,
                anechoic_x_mm: None,
                background_x_mm: None,
                tissue_x_mm: None,
                amplitude_multiplier: None,
            },
            grid: GridSection {
                center_mm: [0.0, 0.0, 19.0],
                spacing_mm: [0.3, 0.4, 0.2],
                dims: [59, 13, 81],
            },
            noise: Some(NoiseSection { snr_db: 30.0 }),
            ..Self::desk_psf_default()
        }
    }

    /// Desk-scale depth study: tube pairs every 4 mm from 12 to 24 mm.
    pub fn desk_depth_study_default() -> Self {
        ExperimentConfig {
            phantom: PhantomSection::Cyst {
                density: 10.0,
                bounds_min_mm: Some([-10.2, -2.4, 9.0]),
                bounds_max_mm: Some([10.2, 2.4, 27.0]),
                tube_radius_mm: None,
                tube_depths_mm: Some(vec![12.0, 16.0, 20.0, 24.0]),
                bright_x_mm: None,
                anechoic_x_mm: None,
                background_x_mm: None,
                tissue_x_mm: None,
                amplitude_multiplier: None,
            },
            grid: GridSection {
                center_mm: [0.0, 0.0, 18.0],
                spacing_mm: [0.3, 0.4, 0.2],
                dims: [59, 13, 71],
            },
            ..Self::desk_cyst_default()
        }
    }

    /// Swap in the full-scale 128+128 probe (fine pitch, full bandwidth) and
    /// a finer grid.
    pub fn to_full_scale(mut self) -> Self {
        self.probe.num_rows = 128;
        self.probe.num_cols = 128;
        self.probe.pitch_mm = 0.2;
        self.probe.bandwidth_mhz = 6.0;
        self.grid.spacing_mm = [
            self.grid.spacing_mm[0] / 2.0,
            self.grid.spacing_mm[1] / 2.0,
            self.grid.spacing_mm[2] / 2.0,
        ];
        self.grid.dims = [
            self.grid.dims[0] * 2 - 1,
            self.grid.dims[1] * 2 - 1,
            self.grid.dims[2] * 2 - 1,
        ];
        self
    }
}

/// SHA-256 of the canonical TOML encoding, as lowercase hex.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let text = config.to_toml()?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{:02x}", b)).collect())
}

/// Named substream seed derived from the run seed (FNV-1a fold), so the
/// phantom and noise draws stay independent of each other.
pub fn substream_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in seed.to_le_bytes().iter().chain(label.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
