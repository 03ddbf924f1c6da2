//! End-to-end tests of the `lab` binary: exit codes, emitted artifacts,
//! and byte-level determinism of repeated runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_lab(args: &[&str]) -> Output {
    lab().args(args).output().expect("binary runs")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lab-cli-{tag}-{}", std::process::id()));
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL_APPROX: &str = r#"{
    "field": {"name": "harmonic_sinexp"},
    "grid_depth": 7,
    "max_depth": 5,
    "epsilons": [0.2]
}"#;

#[test]
fn goodlambda_defaults_exit_zero_and_emit_report() {
    let dir = tempdir("gl");
    let config = write_config(&dir, "config.json", "{}");
    let out = dir.join("out");
    let output = run_lab(&[
        "goodlambda",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let report_path = out.join("report.json");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["version"], "1");
    assert_eq!(report["command"], "goodlambda");
    assert_eq!(report["passed"], true);
    assert!(report["gates"].as_array().map_or(false, |g| !g.is_empty()));

    let tables = out.join("tables");
    let n_tables = fs::read_dir(&tables).map(|d| d.count()).unwrap_or(0);
    assert!(n_tables > 0, "expected CSV tables in {}", tables.display());

    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("[pass]"), "stdout: {stdout}");
    assert!(stdout.contains("report:"), "stdout: {stdout}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn approximate_small_run_exits_zero() {
    let dir = tempdir("approx");
    let config = write_config(&dir, "config.json", SMALL_APPROX);
    let out = dir.join("out");
    let output = run_lab(&[
        "approximate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["rows"].as_array().unwrap().len(), 1);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn failing_gate_exits_one_but_still_writes_report() {
    // Shallow stopping depth on a steep field leaves most cells unresolved.
    let dir = tempdir("gate");
    let config = write_config(
        &dir,
        "config.json",
        r#"{
            "field": {"name": "coordinate_y"},
            "grid_depth": 5,
            "max_depth": 3,
            "epsilons": [0.05]
        }"#,
    );
    let out = dir.join("out");
    let output = run_lab(&[
        "approximate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("[FAIL]"), "stdout: {stdout}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempdir("badcfg");
    let config = write_config(&dir, "config.json", r#"{"k_blue": -2.0}"#);
    let output = run_lab(&["goodlambda", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("k_blue"), "stderr: {stderr}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn unparseable_config_exits_two() {
    let dir = tempdir("parse");
    let config = write_config(&dir, "config.json", "not json ::: not toml =");
    let output = run_lab(&["goodlambda", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_config_file_exits_three() {
    let output = run_lab(&["goodlambda", "--config", "/nonexistent/nowhere.json"]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error:"), "stderr: {stderr}");
}

#[test]
fn toml_config_is_accepted() {
    let dir = tempdir("toml");
    let config = write_config(
        &dir,
        "config.toml",
        "grid_depth = 7\nmax_depth = 5\nepsilons = [0.2]\n\n[field]\nname = \"harmonic_sinexp\"\n",
    );
    let out = dir.join("out");
    let output = run_lab(&[
        "approximate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn depth_override_changes_the_run() {
    let dir = tempdir("depth");
    let config = write_config(&dir, "config.json", SMALL_APPROX);
    let out = dir.join("out");
    let output = run_lab(&[
        "approximate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--depth",
        "4",
    ]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["max_depth"], 4);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempdir("determinism");
    let config = write_config(&dir, "config.json", SMALL_APPROX);
    let mut snapshots: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("out-{run}"));
        let output = run_lab(&[
            "verify",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        let mut stack = vec![out.clone()];
        while let Some(d) = stack.pop() {
            for entry in fs::read_dir(&d).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(&out).unwrap().to_string_lossy().into_owned();
                    files.push((rel, fs::read(&path).unwrap()));
                }
            }
        }
        files.sort_by(|a, b| a.0.cmp(&b.0));
        snapshots.push(files);
    }
    let names: Vec<&String> = snapshots[0].iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        snapshots[1].iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "same artifact set"
    );
    for ((name, a), (_, b)) in snapshots[0].iter().zip(snapshots[1].iter()) {
        assert_eq!(a, b, "artifact `{name}` differs between identical runs");
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn every_command_runs_on_the_default_small_config() {
    let dir = tempdir("allcmds");
    let config = write_config(
        &dir,
        "config.json",
        r#"{
            "field": {"name": "harmonic_sinexp"},
            "grid_depth": 7,
            "max_depth": 5,
            "epsilons": [0.2],
            "counting": {"depth": 6},
            "goodlambda": {"depth": 8, "seeds": [1, 2, 3]}
        }"#,
    );
    for cmd in ["approximate", "verify", "classify", "fatou", "goodlambda", "sweep"] {
        let out = dir.join(format!("out-{cmd}"));
        let output = run_lab(&[
            cmd,
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            output.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["command"], cmd);
    }
    fs::remove_dir_all(&dir).ok();
}
