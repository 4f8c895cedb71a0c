//! Command-line front end: point-target, cyst, sweep, and depth-study runs
//! with file exports.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rcabeam::compound::DbVolume;
use rcabeam::geometry::Axis;
use rcabeam::harness::{
    export_metrics_csv, export_profile, export_slice, export_sweep_csv, export_volume,
    parse_axis, run_experiment, run_sweep, ExperimentConfig, ExperimentOutput, PhantomSection,
    SlicePlane,
};

#[derive(Parser)]
#[command(
    name = "rcabeam",
    version,
    about = "Plane-wave synthesis, beamforming, and image-quality metrics for row-column arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (TOML). Defaults to a built-in desk-scale setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created on success paths only).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results are identical either way.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Compounding methods to run (repeatable: das, fmas, rcfmas).
    #[arg(long = "method")]
    methods: Vec<String>,
    /// Full-scale probe (128+128) and a twice-refined grid.
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Image a single point target and report PSF metrics.
    Psf {
        #[command(flatten)]
        common: CommonArgs,
        /// Total transmissions (even; half rows, half columns).
        #[arg(long)]
        angles: Option<usize>,
        /// Full steering span in degrees.
        #[arg(long)]
        range_deg: Option<f64>,
    },
    /// Image the cyst phantom and report contrast metrics per tube depth.
    Cyst {
        #[command(flatten)]
        common: CommonArgs,
        /// Total transmissions (even; half rows, half columns).
        #[arg(long)]
        angles: Option<usize>,
        /// Full steering span in degrees.
        #[arg(long)]
        range_deg: Option<f64>,
        /// Scatterers per resolution cell (>= 5).
        #[arg(long)]
        density: Option<f64>,
    },
    /// Sweep angle count and range on a point target; axes take VALUE or
    /// START:STOP:STEP.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Angle-count axis, e.g. `10` or `6:30:4`.
        #[arg(long, default_value = "6:30:4")]
        angles: String,
        /// Range axis in degrees, e.g. `10` or `5:45:5`.
        #[arg(long, default_value = "5:45:5")]
        range_deg: String,
    },
    /// Cyst study with tube pairs at several depths.
    DepthStudy {
        #[command(flatten)]
        common: CommonArgs,
        /// Total transmissions (even; half rows, half columns).
        #[arg(long)]
        angles: Option<usize>,
        /// Full steering span in degrees.
        #[arg(long)]
        range_deg: Option<f64>,
        /// Scatterers per resolution cell (>= 5).
        #[arg(long)]
        density: Option<f64>,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {:#}", e);
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Psf {
            common,
            angles,
            range_deg,
        } => {
            let config = resolve_config(
                &common,
                ExperimentConfig::desk_psf_default,
                angles,
                range_deg,
                None,
            )?;
            with_pool(common.workers, || run_imaging(&config, &common.out, "psf"))
        }
        Command::Cyst {
            common,
            angles,
            range_deg,
            density,
        } => {
            let config = resolve_config(
                &common,
                ExperimentConfig::desk_cyst_default,
                angles,
                range_deg,
                density,
            )?;
            with_pool(common.workers, || run_imaging(&config, &common.out, "cyst"))
        }
        Command::DepthStudy {
            common,
            angles,
            range_deg,
            density,
        } => {
            let config = resolve_config(
                &common,
                ExperimentConfig::desk_depth_study_default,
                angles,
                range_deg,
                density,
            )?;
            with_pool(common.workers, || {
                run_imaging(&config, &common.out, "depth_study")
            })
        }
        Command::Sweep {
            common,
            angles,
            range_deg,
        } => {
            let config =
                resolve_config(&common, ExperimentConfig::desk_psf_default, None, None, None)?;
            let angle_counts: Vec<usize> = parse_axis(&angles)
                .context("bad --angles axis")?
                .iter()
                .map(|&v| v.round() as usize)
                .collect();
            let ranges = parse_axis(&range_deg).context("bad --range-deg axis")?;
            with_pool(common.workers, || {
                let rows = run_sweep(&config, &angle_counts, &ranges)?;
                std::fs::create_dir_all(&common.out)?;
                let path = common.out.join("sweep.csv");
                export_sweep_csv(&rows, &path)?;
                println!("wrote {} rows to {}", rows.len(), path.display());
                Ok(())
            })
        }
    }
}

/// Load or default the config, then layer the command-line overrides on top.
/// Everything is validated before any output path is touched.
fn resolve_config(
    common: &CommonArgs,
    default: fn() -> ExperimentConfig,
    angles: Option<usize>,
    range_deg: Option<f64>,
    density: Option<f64>,
) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => default(),
    };
    if common.full {
        config = config.to_full_scale();
    }
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    if let Some(n) = angles {
        config.schedule.angles_total = n;
    }
    if let Some(r) = range_deg {
        config.schedule.range_deg = r;
    }
    if !common.methods.is_empty() {
        config.run.methods = common.methods.clone();
    }
    if let Some(d) = density {
        match &mut config.phantom {
            PhantomSection::Cyst { density, .. } => *density = d,
            PhantomSection::Point { .. } => {
                bail!("--density applies only to cyst phantoms")
            }
        }
    }
    config.validate().context("invalid configuration")?;
    Ok(config)
}

fn with_pool(workers: usize, body: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    if workers == 0 {
        return body();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?
        .install(body)
}

fn peak_index(db: &DbVolume) -> [usize; 3] {
    let (v, _) = db
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty volume");
    db.grid.index_of(v)
}

/// Shared runner for psf / cyst / depth-study: volumes, slices, profiles,
/// and the metrics table, named `<prefix>_*` inside the output directory.
fn run_imaging(config: &ExperimentConfig, out: &Path, prefix: &str) -> Result<()> {
    let output: ExperimentOutput = run_experiment(config)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    let is_point = matches!(config.phantom, PhantomSection::Point { .. });
    let mut all_reports = Vec::new();
    for m in &output.per_method {
        let base = out.join(format!("{}_{}", prefix, m.method));
        export_volume(&m.envelope, &output.config_hash, &base)?;
        let peak = peak_index(&m.db);
        if is_point {
            export_slice(
                &m.db,
                SlicePlane::Xy { k: peak[2] },
                &out.join(format!("{}_{}_xy.pgm", prefix, m.method)),
            )?;
            export_slice(
                &m.db,
                SlicePlane::Xz { j: peak[1] },
                &out.join(format!("{}_{}_xz.pgm", prefix, m.method)),
            )?;
            export_profile(
                &m.db,
                Axis::X,
                &out.join(format!("{}_{}_profile_x.csv", prefix, m.method)),
            )?;
        } else {
            // Contrast phantoms: slice through the lateral mid-plane.
            export_slice(
                &m.db,
                SlicePlane::Xz {
                    j: m.db.grid.dims[1] / 2,
                },
                &out.join(format!("{}_{}_xz.pgm", prefix, m.method)),
            )?;
        }
        all_reports.extend(m.reports.iter().cloned());
        println!(
            "{}: compounded {} pairs in {:.3} s",
            m.method, m.envelope.pairs_used, m.compound_seconds
        );
    }
    let metrics_path = out.join(format!("{}_metrics.csv", prefix));
    export_metrics_csv(&all_reports, &metrics_path)?;
    println!(
        "wrote {} method(s) and {} to {}",
        output.per_method.len(),
        metrics_path.file_name().unwrap().to_string_lossy(),
        out.display()
    );
    Ok(())
}
