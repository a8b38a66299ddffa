//! End-to-end runs of the `delayed-claims` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delayed-claims"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("delayed-claims-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn csv_rows(path: &Path) -> (String, Vec<String>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(str::to_string);
    let header = lines.next().unwrap();
    (header, lines.collect())
}

#[test]
fn approx_run_writes_tagged_csv_and_summary() {
    let out = scratch("approx");
    let status = bin()
        .args(["run", bundled("approx.json").to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let (header, rows) = csv_rows(&out.join("approx.csv"));
    assert!(header.starts_with("scenario_id,formula,x[claim units],t[time]"));
    // 3 levels × (2 finite + 1 infinite horizons) × (quadrature + closed form)
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().any(|r| r.contains(",thm41ii,")));
    assert!(rows.iter().any(|r| r.contains(",cor31ii,")));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["mode"], "approx");
    assert!(summary["unix_timestamp"].as_u64().unwrap() > 0);
}

#[test]
fn compare_run_has_one_row_per_grid_point() {
    let out = scratch("compare");
    let config = out.join("compare.json");
    let mut cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(bundled("compare.json")).unwrap()).unwrap();
    cfg["n"] = 20_000.into();
    fs::write(&config, cfg.to_string()).unwrap();
    let status = bin()
        .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2", "--seed", "5"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let (_, rows) = csv_rows(&out.join("compare.csv"));
    assert_eq!(rows.len(), 9);
    let (_, uni) = csv_rows(&out.join("uniformity.csv"));
    assert_eq!(uni.len(), 3);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 5);
}

#[test]
fn closure_run_writes_one_file_per_check() {
    let out = scratch("closure");
    let config = out.join("closure.json");
    let mut cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(bundled("closure.json")).unwrap()).unwrap();
    cfg["closure"][3]["replications"] = 100_000.into();
    fs::write(&config, cfg.to_string()).unwrap();
    let status = bin()
        .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let csvs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert_eq!(csvs.len(), 5);
    for path in csvs {
        let (header, rows) = csv_rows(&path);
        assert!(header.starts_with("property,x[claim units]"));
        assert!(rows.iter().all(|r| r.ends_with(",pass") || r.ends_with(",fail")));
    }
}

#[test]
fn bad_configs_exit_with_status_two() {
    let dir = scratch("bad");
    let cases = [
        ("syntax.json", r#"{"mode": "simulate", "#.to_string()),
        ("type.json", r#"{"mode": "approx", "x_grid": ["ten"]}"#.to_string()),
        ("unknown.json", r#"{"mode": "approx", "colour": 1}"#.to_string()),
        ("empty.json", r#"{"mode": "closure"}"#.to_string()),
    ];
    for (name, text) in cases {
        let path = dir.join(name);
        fs::write(&path, text).unwrap();
        let output = bin().args(["run", path.to_str().unwrap()]).output().unwrap();
        assert_eq!(output.status.code(), Some(2), "{name}");
        assert!(!output.stderr.is_empty());
    }
    let output = bin().args(["run", dir.join("missing.json").to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(
        bin()
            .args(["run", dir.join("type.json").to_str().unwrap()])
            .output()
            .unwrap()
            .stderr,
    )
    .unwrap();
    assert!(stderr.contains("x_grid[0]"), "{stderr}");
}

#[test]
fn thread_count_env_var_is_validated() {
    let out = scratch("env");
    let output = bin()
        .env("DELAYED_CLAIMS_THREADS", "lots")
        .args(["run", bundled("approx.json").to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
