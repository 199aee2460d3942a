//! End-to-end runs of the `driftlab` binary: exit codes, artifacts, reports.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn driftlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, config: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(dir: &Path, sub: &str, config: &Value, out: &str) -> Output {
    let cfg = write_config(dir, &format!("{out}.json"), config);
    let out = dir.join(out);
    driftlab(&[sub, "--config", &cfg, "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn martingale_config(seed: u64) -> Value {
    json!({
        "experiment": "mc",
        "params": {
            "grid": {"d": 1, "half_width": 4.0, "n_x": 64, "horizon": 1.0, "n_t": 32},
            "source": {"kind": "zero"},
            "drift": {"kind": "zero"},
            "start": {"t": 0.0, "x": [0.0]},
            "mc": {"paths": 2000, "dt": 0.02, "seed": seed},
            "martingale": {"lambdas": [0.5, 1.0, 2.0]}
        }
    })
}

fn feynman_kac_config(seed: u64) -> Value {
    json!({
        "experiment": "mc",
        "params": {
            "grid": {"d": 1, "half_width": 4.0, "n_x": 64, "horizon": 1.0, "n_t": 32},
            "source": {"kind": "gaussian", "amplitude": 1.0, "center_time": 0.5, "time_width": 0.2, "width": 0.5},
            "drift": {"kind": "constant", "value": 0.3},
            "start": {"t": 0.0, "x": [0.0]},
            "mc": {"paths": 2000, "dt": 0.02, "seed": seed},
            "feynman_kac": {"relative_tolerance": 0.05}
        }
    })
}

fn anisotropic_config(cauchy: f64) -> Value {
    json!({
        "experiment": "anisotropic",
        "label": "anisotropic",
        "params": {
            "d": 3, "p": 2.0, "q": 1.2,
            "h_list": [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
            "slice_time": 0.5,
            "exponent_tolerance": 0.2,
            "cauchy_tolerance": cauchy
        }
    })
}

#[test]
fn reproduction_constant_in_one_dimension_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "experiment": "constants",
        "params": {"reproduction": [{"d": 1, "tolerance": 0.02}], "composition": []}
    });
    let o = run(dir.path(), "constants", &config, "c");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("c/report.md")).unwrap();
    let line = report
        .lines()
        .find(|l| l.contains("0.28209"))
        .expect("check row");
    assert!(line.ends_with("| PASS |"), "{line}");
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "PASS");
    let csv = fs::read_to_string(dir.path().join("c/constants.csv")).unwrap();
    assert!(csv.starts_with("kind,d,alpha,beta,k,fitted_value"));
}

#[test]
fn driftless_martingale_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "mc", &martingale_config(1), "m");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("m/mc.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let cells: Vec<&str> = r.split(',').collect();
        // Zero drift: every exponential moment and its bound equal one.
        assert_eq!(cells[2], "1.0", "{r}");
        assert_eq!(cells[5], "1.0", "{r}");
    }
}

#[test]
fn small_time_exponent_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "experiment": "scaling",
        "params": {
            "d": 1, "half_width": 8.0, "n_x": 64, "n_t": 16,
            "norm": {"q": 0.5, "p": 2.0, "order": "time_outer"},
            "horizons": [0.5, 1.0],
            "source": {"kind": "gaussian", "amplitude": 1.0, "center_time": 0.5, "time_width": 0.2, "width": 0.5},
            "tolerance": 0.1
        }
    });
    let o = run(dir.path(), "scaling", &config, "s");
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("time exponent q = 0.5 must exceed 1"),
        "{}",
        stderr(&o)
    );
    assert!(!dir.path().join("s/summary.json").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let mut unknown = martingale_config(1);
    unknown["params"]["paths"] = json!(10);
    let cfg = write_config(dir.path(), "unknown.json", &unknown);
    let o = driftlab(&["mc", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "mc.json", &martingale_config(1));
    let o = driftlab(&["solve", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not solve"), "{}", stderr(&o));

    let o = driftlab(&["mc", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("output directory"), "{}", stderr(&o));

    let o = driftlab(&["mc", "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    let o = driftlab(&[
        "mc",
        "--config",
        dir.path().join("absent.json").to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = driftlab(&["mc", "--config", &cfg, "--out", out, "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let o = driftlab(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "anisotropic", &anisotropic_config(1e-12), "a");
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "FAIL");
    assert!(dir.path().join("a/anisotropic.csv").exists());
}

#[test]
fn unstable_drift_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "experiment": "solve",
        "params": {
            "grid": {"d": 1, "half_width": 4.0, "n_x": 64, "horizon": 1.0, "n_t": 8},
            "source": {"kind": "gaussian", "amplitude": 1.0, "center_time": 0.5, "time_width": 0.2, "width": 0.5},
            "drift": {"kind": "constant", "value": 1000.0},
            "norm": {"q": 4.0, "p": 4.0, "order": "time_outer"},
            "picard": null
        }
    });
    let o = run(dir.path(), "solve", &config, "s");
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(
        stderr(&o).starts_with("numerical failure"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = feynman_kac_config(5);
    assert_eq!(run(dir.path(), "mc", &config, "a").status.code(), Some(0));
    assert_eq!(run(dir.path(), "mc", &config, "b").status.code(), Some(0));
    let a = fs::read(dir.path().join("a/mc.csv")).unwrap();
    let b = fs::read(dir.path().join("b/mc.csv")).unwrap();
    assert_eq!(a, b);

    // --seed overrides the config's seed, and --threads does not change the numbers.
    let cfg = write_config(dir.path(), "fk.json", &config);
    let c = dir.path().join("c");
    let o = driftlab(&[
        "mc",
        "--config",
        &cfg,
        "--out",
        c.to_str().unwrap(),
        "--seed",
        "6",
        "--threads",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_ne!(fs::read(c.join("mc.csv")).unwrap(), a);
    let d = dir.path().join("d");
    let o = driftlab(&[
        "mc",
        "--config",
        &cfg,
        "--out",
        d.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(d.join("mc.csv")).unwrap(), a);
}

#[test]
fn output_dir_from_config_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = martingale_config(2);
    let target = dir.path().join("from_config");
    config["output_dir"] = json!(target);
    let cfg = write_config(dir.path(), "m.json", &config);
    let o = driftlab(&["mc", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(target.join("summary.json").exists());
}

#[test]
fn report_of_empty_directory_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let o = driftlab(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn report_flags_failing_and_missing_runs() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    fs::create_dir_all(&runs).unwrap();
    assert_eq!(
        run(&runs, "anisotropic", &anisotropic_config(0.02), "pass")
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&runs, "anisotropic", &anisotropic_config(1e-12), "fail")
            .status
            .code(),
        Some(1)
    );
    // Remove the config files so only run directories remain.
    for f in ["pass.json", "fail.json"] {
        fs::remove_file(runs.join(f)).unwrap();
    }

    let o = driftlab(&["report", runs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let md = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(md.contains("**FAIL**"), "{md}");

    let mut r = csv::Reader::from_path(runs.join("aggregate.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    let failing: Vec<_> = rows.iter().filter(|x| &x[8] == "FAIL").collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(&failing[0][0], "fail");
    assert!(failing[0][4].contains("space-outer"));
    assert!(rows
        .iter()
        .filter(|x| &x[0] == "pass")
        .all(|x| &x[8] == "PASS"));

    // A deleted artifact shows up as its own row.
    fs::remove_file(runs.join("pass/anisotropic.csv")).unwrap();
    let out = dir.path().join("agg");
    let o = driftlab(&[
        "report",
        runs.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let csv = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(
        csv.lines()
            .any(|l| l.starts_with("pass,") && l.ends_with("MISSING")),
        "{csv}"
    );
}
