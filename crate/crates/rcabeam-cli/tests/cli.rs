//! Black-box tests of the `rcabeam` binary: argument validation, error
//! behavior, and the file sets each run writes.

use std::path::Path;
use std::process::{Command, Output};

use rcabeam::harness::ExperimentConfig;

fn rcabeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcabeam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_config_fails_before_creating_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = rcabeam(&[
        "psf",
        "--config",
        dir.path().join("no-such.toml").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success(), "stderr: {}", stderr(&out));
    assert!(stderr(&out).starts_with("error:"));
    assert!(
        !out_dir.exists(),
        "a failed run must not leave partial outputs"
    );
}

#[test]
fn odd_angle_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = rcabeam(&["psf", "--angles", "7", "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("even"), "stderr: {}", stderr(&out));
    assert!(!out_dir.exists());
}

#[test]
fn degenerate_sweep_axis_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = rcabeam(&[
        "sweep",
        "--angles",
        "6:30:0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success(), "stderr: {}", stderr(&out));
    assert!(!out_dir.exists());
}

#[test]
fn density_override_is_rejected_on_point_phantoms() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = rcabeam(&[
        "psf",
        "--density",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("density"),
        "stderr: {}",
        stderr(&out)
    );
    assert!(!out_dir.exists());
}

fn assert_file(dir: &Path, name: &str) {
    let path = dir.join(name);
    assert!(path.is_file(), "missing output {}", path.display());
    assert!(path.metadata().unwrap().len() > 0, "{} is empty", name);
}

#[test]
fn point_run_writes_volumes_slices_profiles_and_metrics() {
    // Shrink the default point-target run so it finishes in seconds.
    let mut config = ExperimentConfig::desk_psf_default();
    config.probe.num_rows = 16;
    config.probe.num_cols = 16;
    config.schedule.angles_total = 4;
    config.grid.spacing_mm = [0.8, 0.8, 0.2];
    config.grid.dims = [14, 14, 14];

    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("tiny_psf.toml");
    std::fs::write(&config_path, config.to_toml().unwrap()).unwrap();
    let out_dir = dir.path().join("results");

    let out = rcabeam(&[
        "psf",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    for method in ["das", "fmas", "rcfmas"] {
        assert_file(&out_dir, &format!("psf_{}.raw", method));
        assert_file(&out_dir, &format!("psf_{}.meta", method));
        assert_file(&out_dir, &format!("psf_{}_xy.pgm", method));
        assert_file(&out_dir, &format!("psf_{}_xz.pgm", method));
        assert_file(&out_dir, &format!("psf_{}_profile_x.csv", method));
    }
    assert_file(&out_dir, "psf_metrics.csv");

    let metrics = std::fs::read_to_string(out_dir.join("psf_metrics.csv")).unwrap();
    for method in ["das", "fmas", "rcfmas"] {
        assert!(
            metrics.lines().any(|l| l.starts_with(method)),
            "metrics table lacks a {} row:\n{}",
            method,
            metrics
        );
    }
}

#[test]
fn method_filter_limits_the_outputs() {
    let mut config = ExperimentConfig::desk_psf_default();
    config.probe.num_rows = 16;
    config.probe.num_cols = 16;
    config.schedule.angles_total = 4;
    config.grid.spacing_mm = [0.8, 0.8, 0.2];
    config.grid.dims = [10, 10, 10];

    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("tiny_psf.toml");
    std::fs::write(&config_path, config.to_toml().unwrap()).unwrap();
    let out_dir = dir.path().join("results");

    let out = rcabeam(&[
        "psf",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--method",
        "das",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert_file(&out_dir, "psf_das.raw");
    assert!(!out_dir.join("psf_fmas.raw").exists());
    assert!(!out_dir.join("psf_rcfmas.raw").exists());
}
