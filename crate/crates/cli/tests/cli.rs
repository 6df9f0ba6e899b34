use std::fs;
use std::path::Path;
use std::process::Command;

use cbs_cli::{parse_config, run, Mode, Normalization, RunConfig};
use cbs_core::{AtomFieldParams, KernelSet};

fn cfg(mode: Mode, dir: &Path) -> RunConfig {
    RunConfig {
        mode,
        points: 31,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn column(text: &str, idx: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn cbs(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cbs")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

#[test]
fn spectra_tables_have_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&cfg(Mode::Spectra, dir.path())).unwrap();
    assert!(!report.flagged, "{:?}", report.warnings);
    let spectra = read(dir.path(), "spectra.csv");
    assert!(spectra.starts_with("omega_D_offset_over_gamma,ladder_inel,crossed_inel\n"));
    assert!(spectra.lines().count() > 31);
    let lines = read(dir.path(), "elastic_lines.csv");
    assert!(lines.starts_with("position,ladder_weight,crossed_weight\n"));
    assert_eq!(lines.lines().count(), 2);
    assert_eq!(column(&lines, 0), vec![0.0]);
    assert!(read(dir.path(), "totals.csv").starts_with("contribution,elastic,inelastic,total,abs_error\n"));
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path(), "metadata.json")).unwrap();
    for key in ["version", "config", "wall_time_s", "diagnostics", "quadrature", "grid", "normalization"] {
        assert!(meta.get(key).is_some(), "metadata lacks {key}");
    }
}

#[test]
fn identical_configs_give_identical_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut c = cfg(Mode::Spectra, a.path());
    c.rabi = 10.0;
    run(&c).unwrap();
    c.output_dir = b.path().to_path_buf();
    run(&c).unwrap();
    for f in ["spectra.csv", "elastic_lines.csv", "totals.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn metadata_alone_reproduces_the_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut c = cfg(Mode::Spectra, a.path());
    c.normalization = Normalization::UnitPeak;
    c.detuning = 1.5;
    run(&c).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&read(a.path(), "metadata.json")).unwrap();
    let mut again: RunConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    again.output_dir = b.path().to_path_buf();
    run(&again).unwrap();
    assert_eq!(read(a.path(), "spectra.csv"), read(b.path(), "spectra.csv"));
    assert_eq!(read(a.path(), "elastic_lines.csv"), read(b.path(), "elastic_lines.csv"));
}

#[test]
fn unit_peak_columns_reach_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Mode::Spectra, dir.path());
    c.normalization = Normalization::UnitPeak;
    run(&c).unwrap();
    let t = read(dir.path(), "spectra.csv");
    for idx in [1, 2] {
        let m = column(&t, idx).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(m, 1.0);
    }
}

#[test]
fn undriven_totals_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Mode::Totals, dir.path());
    c.rabi = 0.0;
    let report = run(&c).unwrap();
    assert!(!report.flagged);
    let t = read(dir.path(), "totals.csv");
    assert_eq!(column(&t, 3), vec![0.0, 0.0]);
}

#[test]
fn kernels_table_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Mode::Kernels, dir.path());
    c.rabi = 2.0;
    c.gamma = 2.0;
    run(&c).unwrap();
    let k = KernelSet::new(&AtomFieldParams::new(2.0, -5.0, 2.0).unwrap()).unwrap();
    let t = read(dir.path(), "kernels.csv");
    for (w, p0) in column(&t, 0).into_iter().zip(column(&t, 1)) {
        assert!((k.p0_smooth(w * 2.0) - p0).abs() <= 1e-15 * p0.abs().max(1e-300) + 1e-300);
    }
    let lines = read(dir.path(), "kernel_lines.csv");
    assert!(lines.lines().nth(1).unwrap().starts_with("p0,0e0,"));
}

#[test]
fn sweep_rows_follow_the_axes_and_resonance_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Mode::Sweep, dir.path());
    c.sweep_rabi = vec![1.0, 0.5];
    c.sweep_detuning = vec![-5.0, 0.0];
    let report = run(&c).unwrap();
    let t = read(dir.path(), "sweep.csv");
    assert_eq!(column(&t, 0), vec![1.0, 1.0, 0.5, 0.5]);
    assert_eq!(column(&t, 1), vec![-5.0, 0.0, -5.0, 0.0]);
    // on resonance the crossed total is not bounded by the ladder total
    assert_eq!(column(&t, 9), vec![0.0, 1.0, 0.0, 1.0]);
    assert!(report.flagged);
    assert_eq!(report.exit_code(), 2);
}

#[test]
fn verify_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Mode::Verify, dir.path());
    c.rabi = 10.0;
    c.points = 41;
    let report = run(&c).unwrap();
    let (l, x) = report.oracle_l2.unwrap();
    assert!(l <= 1e-3 && x <= 1e-3, "{l} {x}");
    assert_eq!(report.exit_code(), 0);
    let t = read(dir.path(), "spectra.csv");
    assert!(t.starts_with("omega_D_offset_over_gamma,ladder_inel,crossed_inel,oracle_ladder_inel,oracle_crossed_inel\n"));
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path(), "metadata.json")).unwrap();
    assert!(meta["oracle"]["relative_l2_ladder"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = cbs(&["totals", "--rabi", "-1", "-o", out]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("rabi"));

    let cfg_path = dir.path().join("c.toml");
    fs::write(&cfg_path, "rabbi = 1\n").unwrap();
    let bad = cbs(&["totals", "-c", cfg_path.to_str().unwrap(), "-o", out]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("rabbi"));

    fs::write(&cfg_path, "").unwrap();
    let ok = cbs(&["spectra", "-c", cfg_path.to_str().unwrap(), "--points", "11", "-o", out]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path(), "metadata.json")).unwrap();
    assert_eq!(meta["config"]["rabi"], 0.1);
    assert_eq!(meta["config"]["detuning"], -5.0);

    let flagged = cbs(&["totals", "--rabi", "1", "--detuning", "0", "-o", out]);
    assert_eq!(flagged.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.toml");
    fs::write(&cfg_path, "mode = \"totals\"\nrabi = 10\npoints = 99\n").unwrap();
    let o = cbs_cli::args::Overrides {
        config: Some(cfg_path),
        points: Some(7),
        ..Default::default()
    };
    let c = o.resolve(None).unwrap();
    assert_eq!((c.mode, c.rabi, c.points), (Mode::Totals, 10.0, 7));
    assert_eq!(o.resolve(Some(Mode::Kernels)).unwrap().mode, Mode::Kernels);
    assert_eq!(parse_config("").unwrap().points, 2001);
}
