use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn heatstore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatstore"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn edited_config(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v = read_json(&configs().join(name));
    edit(&mut v);
    let path = dir.join(format!("edited-{name}"));
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn solve_toy(dir: &Path, threads: &str) -> PathBuf {
    let out = dir.join(format!("solve-{threads}"));
    let cfg = configs().join("toy.json");
    let o = heatstore(&["--threads", threads, "solve", "--config", p(&cfg), "--out", p(&out), "--slices", "0,5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn calibrate_reproduces_reference_parameters() {
    let o = heatstore(&["calibrate", "--config", p(&configs().join("basic.json"))]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let m = &v["model"];
    let close = |x: &Value, t: f64| (x.as_f64().unwrap() - t).abs() <= 0.01 * t;
    assert!(close(&m["storage"]["gamma"], 2.34e-4));
    assert!(close(&m["seasonality"]["l0"], 0.37));
    assert!(close(&m["seasonality"]["components"][0]["amplitude"], 1.00));
}

#[test]
fn calibrate_without_targets_is_a_usage_error() {
    let o = heatstore(&["calibrate", "--config", p(&configs().join("toy.json"))]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "usage");
}

#[test]
fn calibrate_to_no_cooling_gives_zero_gamma_with_warning() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_config(dir.path(), "basic.json", |v| {
        v["calibration"]["gamma"]["q_tilde"] = 85.0.into();
    });
    let o = heatstore(&["calibrate", "--config", p(&cfg)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["model"]["storage"]["gamma"], 0.0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("perfectly insulated"));
}

#[test]
fn solve_writes_snapshot_slices_summary_and_one_manifest() {
    let dir = TempDir::new().unwrap();
    let out = solve_toy(dir.path(), "1");
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["cube.bin", "manifest.json", "slice_00000.csv", "slice_00005.csv", "summary.json"]
    );
    let s = read_json(&out.join("summary.json"));
    assert!(s["max_value"].as_f64().unwrap().is_finite());
    assert_eq!(s["n_t"], 5);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["command"], "solve");
    assert_eq!(m["config_hash"], s["config_hash"]);
    let csv = std::fs::read_to_string(out.join("slice_00005.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("l,j,z,q,value,control"));
    assert_eq!(csv.lines().count(), 1 + 36);
}

#[test]
fn snapshot_is_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let a = std::fs::read(solve_toy(dir.path(), "1").join("cube.bin")).unwrap();
    let b = std::fs::read(solve_toy(dir.path(), "3").join("cube.bin")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cfl_violation_exits_with_required_step() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_config(dir.path(), "toy.json", |v| v["grid"]["n_q"] = 2000.into());
    let o = heatstore(&["solve", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("\"error\":\"cfl\"") && stderr.contains("required minimum"), "{stderr}");
}

#[test]
fn invalid_model_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_config(dir.path(), "toy.json", |v| v["model"]["pumps"]["d1"] = 0.5.into());
    let o = heatstore(&["solve", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pumps.d1"));
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let snap = solve_toy(dir.path(), "1").join("cube.bin");
    let cfg = configs().join("toy.json");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = heatstore(&[
            "simulate", "--config", p(&cfg), "--snapshot", p(&snap), "--out", p(&out),
            "--n-paths", "1", "--seed", "42",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let csv_a = std::fs::read(a.join("path_00000.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("path_00000.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("summary.json")).unwrap(),
        std::fs::read(b.join("summary.json")).unwrap()
    );
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().next(), Some("t,z,r,q,a,a_signed,stage_cost"));
    assert_eq!(text.lines().count(), 1 + 5 + 1);
}

#[test]
fn simulate_estimate_matches_the_value_function() {
    let dir = TempDir::new().unwrap();
    let snap = solve_toy(dir.path(), "1").join("cube.bin");
    let out = dir.path().join("mc");
    let o = heatstore(&[
        "simulate", "--config", p(&configs().join("toy.json")), "--snapshot", p(&snap),
        "--out", p(&out), "--n-paths", "2000", "--seed", "5", "--trajectories", "3",
    ]);
    assert!(o.status.success());
    let s = read_json(&out.join("summary.json"));
    let (mean, se, v0) = (
        s["mean_cost"].as_f64().unwrap(),
        s["stderr"].as_f64().unwrap(),
        s["value_at_start"].as_f64().unwrap(),
    );
    assert!((mean - v0).abs() <= 3.0 * se + 0.05 * v0.abs(), "{mean} {se} {v0}");
    assert_eq!(s["paths"].as_array().unwrap().len(), 3);
    assert!(out.join("path_00002.csv").exists() && !out.join("path_00003.csv").exists());
}

#[test]
fn simulate_refuses_a_snapshot_from_another_config() {
    let dir = TempDir::new().unwrap();
    let snap = solve_toy(dir.path(), "1").join("cube.bin");
    let cfg = edited_config(dir.path(), "toy.json", |v| v["model"]["delta"] = 2e-6.into());
    let o = heatstore(&[
        "simulate", "--config", p(&cfg), "--snapshot", p(&snap), "--out", p(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("was produced from config"));
}

#[test]
fn validate_passes_fresh_and_fails_perturbed_snapshots() {
    let dir = TempDir::new().unwrap();
    let solved = solve_toy(dir.path(), "1");
    let snap = solved.join("cube.bin");
    let cfg = configs().join("toy.json");
    let out = dir.path().join("val");
    let o = heatstore(&["validate", "--config", p(&cfg), "--snapshot", p(&snap), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("report.json").exists() && out.join("manifest.json").exists());

    // Raise V at (N_t, 0, 1) above V at (N_t, 0, 0).
    let mut bytes = std::fs::read(&snap).unwrap();
    let at = 64 + 8 * (5 * 36 + 1);
    let x = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) + 1.0;
    bytes[at..at + 8].copy_from_slice(&x.to_le_bytes());
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, &bytes).unwrap();
    let o = heatstore(&["validate", "--config", p(&cfg), "--snapshot", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.contains("FAIL terminal slice equals terminal cost"), "{report}");
    assert!(report.contains("FAIL value non-increasing in q"), "{report}");

    let empty = dir.path().join("empty.bin");
    std::fs::write(&empty, b"").unwrap();
    let o = heatstore(&["validate", "--config", p(&cfg), "--snapshot", p(&empty)]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(o.stderr.rsplit(|&b| b == b'\n').nth(1).unwrap()).unwrap();
    assert_eq!(err["error"], "snapshot");
}
