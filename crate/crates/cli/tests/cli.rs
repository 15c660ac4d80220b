use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const COARSE_GRID: &str = "0.1:1000:40";

fn ltr(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltr"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("ltr runs")
}

fn run_ok(args: &[&str], out: &Path) -> String {
    let o = ltr(args, out);
    assert!(o.status.success(), "ltr {args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn design_and_analysis_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run_ok(&["design", "--grid", COARSE_GRID], out);
    let design = json(out, "design.json");
    let points = design["points"].as_array().unwrap();
    assert_eq!(points.len(), 5);
    assert_eq!(design["augmented_order"], 14);
    for p in points {
        assert_eq!(p["compensator"]["a"]["rows"], 14);
        assert_eq!(p["stable"], true);
    }
    let errors: Vec<f64> = points.iter().map(|p| p["recovery_error"].as_f64().unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let report = fs::read_to_string(out.join("recovery.txt")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("1.000000e-4 ")));

    let stdout = run_ok(&["analyze", "--grid", COARSE_GRID], out);
    assert!(stdout.contains("np") && stdout.contains("(pass)"), "{stdout}");
    let analysis = json(out, "analysis.json");
    let sel = analysis["points"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| (p["rho"].as_f64().unwrap() - 1e-4).abs() < 1e-12)
        .unwrap()
        .clone();
    assert!(sel["nominal_performance"]["value"].as_f64().unwrap() < 1.0);
    assert!(sel["robust_stability"]["value"].as_f64().unwrap() < 1.0);

    let hash = design["config_hash"].as_str().unwrap().to_string();
    for entry in fs::read_dir(out).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        assert!(text.contains(&hash));
    }
}

#[test]
fn identification_recovers_parameters() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["identify"], dir.path());
    let id = json(dir.path(), "identify.json");
    for axis in id["axes"].as_array().unwrap() {
        assert!(axis["inertia_error"].as_f64().unwrap() < 0.05, "{axis}");
        assert!(axis["friction_error"].as_f64().unwrap() < 0.05, "{axis}");
        assert_eq!(axis["covariance_psd"], true);
    }
    assert!(dir.path().join("ekf_azimuth.txt").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for out in [a.path(), b.path()] {
        run_ok(&["model", "--grid", COARSE_GRID], out);
        run_ok(&["design", "--grid", COARSE_GRID, "--rho", "1e-2,1e-4", "--workers", "2"], out);
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn unknown_config_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "schema_version = 1\n[design]\nrhoz = [1e-3]\n").unwrap();
    let o = ltr(&["model", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rhoz"));
}

#[test]
fn bad_override_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltr(&["design", "--grid", "10:1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = ltr(&["design", "--rho", "1e-4,1e-2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_or_stale_dependency_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltr(&["analyze"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let o = ltr(&["report"], dir.path());
    assert_eq!(o.status.code(), Some(4));

    run_ok(&["design", "--grid", COARSE_GRID, "--rho", "1e-3,1e-4"], dir.path());
    let o = ltr(&["reduce", "--grid", COARSE_GRID, "--rho", "1e-3,1e-4", "--seed", "99"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("different configuration"));
}
