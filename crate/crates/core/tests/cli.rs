use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn clipvi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clipvi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = fixture("small.toml");
    let o = clipvi(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with(
        "method,k,mean_dist2_last,std_dist2_last,mean_dist2_avg,std_dist2_avg,mean_gamma\n"
    ));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert_eq!(json["config"]["master_seed"], 7);
    assert!(json["slopes"]["popov"]["last"].is_number());
    assert!(json["verification"]["checks"].is_array());
}

#[test]
fn same_seed_same_bytes() {
    let cfg = fixture("small.toml");
    let runs: Vec<String> = ["1", "4"]
        .iter()
        .map(|workers| {
            let dir = tempfile::tempdir().unwrap();
            let o = clipvi(&[
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--workers",
                workers,
                "--out",
                dir.path().to_str().unwrap(),
            ]);
            assert_eq!(o.status.code(), Some(0));
            std::fs::read_to_string(dir.path().join("results.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = clipvi(&["run", "--config", "x.toml", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("Usage"), "{}", text(&o.stderr));
}

#[test]
fn missing_subcommand_is_usage_error() {
    let o = clipvi(&[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_failed_sharpness() {
    let cfg = fixture("negative_identity.toml");
    let o = clipvi(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "500",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report = text(&o.stdout);
    let line = report
        .lines()
        .find(|l| l.starts_with("quasi_sharpness"))
        .unwrap();
    assert!(line.ends_with("FAIL"), "{report}");
}

#[test]
fn verify_passes_on_benchmark() {
    let cfg = fixture("small.toml");
    let o = clipvi(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "20000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
}

#[test]
fn config_errors_exit_one() {
    let cfg = fixture("odd_dimension.toml");
    let o = clipvi(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("dimension must be even"));

    let o = clipvi(&["run", "--config", "/nonexistent/exp.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("/nonexistent/exp.toml"));

    let small = fixture("small.toml");
    let o = clipvi(&[
        "run",
        "--config",
        small.to_str().unwrap(),
        "--set",
        "no_such_key=1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        text(&o.stderr).contains("no_such_key"),
        "{}",
        text(&o.stderr)
    );
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("small.toml");
    let o = clipvi(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "seeds=1",
        "--set",
        "methods.1.label=\"popov_q06\"",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.contains("\npopov_q06,"));
    for line in csv.lines().skip(1) {
        let std_last: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(std_last, 0.0);
    }
}

#[test]
fn fit_refits_written_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = fixture("small.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(
        clipvi(&["run", "--config", cfg, "--out", out])
            .status
            .code(),
        Some(0)
    );
    let o = clipvi(&["fit", "--config", cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let fitted: serde_json::Value = serde_json::from_str(&text(&o.stdout)).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    for method in ["projection_two_sample", "popov"] {
        for m in ["last", "avg"] {
            let a = fitted[method][m].as_f64().unwrap();
            let b = report["slopes"][method][m].as_f64().unwrap();
            assert!(
                (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                "{method} {m}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn sweep_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("sweep.toml");
    let o = clipvi(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    let cells = manifest["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    for c in cells {
        assert!(dir.path().join(c["csv"].as_str().unwrap()).exists());
    }
    assert!(dir.path().join("p4_alpha0.5_q0.75.csv").exists());
}
