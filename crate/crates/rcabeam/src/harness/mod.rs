//! Experiment orchestration: configuration, pipeline runs, parameter sweeps,
//! and file exports.

pub mod config;
pub mod experiment;
pub mod export;
pub mod sweep;

pub use config::{
    config_hash, substream_seed, ExperimentConfig, GridSection, NoiseSection, PhantomSection,
    ProbeSection, RunSection, ScheduleSection,
};
pub use experiment::{cyst_rois, run_experiment, ExperimentOutput, MethodOutput};
pub use export::{
    export_metrics_csv, export_profile, export_slice, export_sweep_csv, export_volume,
    read_raw_volume, SlicePlane,
};
pub use sweep::{parse_axis, run_sweep, SweepRow};
