//! End-to-end checks of the command-line interface: the sim -> sysid ->
//! realize pipeline, experiment artifacts, and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_arxlab")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("arxlab_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const SYSTEM_JSON: &str = r#"{
    "n": 1, "m": 1, "p": 1,
    "a": [[0.5]], "b": [[1.0]], "c": [[1.0]], "f": [[0.2]],
    "noise": {"kind": "gaussian", "sub_gaussian_r": 1.0, "sigma_e": [[1.0]], "sigma_e_sq_lower": 1.0}
}"#;

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

#[test]
fn pipeline_sim_sysid_realize() {
    let dir = scratch("pipeline");
    write(
        &dir.join("sim.json"),
        &format!(r#"{{"system": {SYSTEM_JSON}, "steps": 4000, "seed": 7, "sigma_u": 1.0}}"#),
    );
    let status = Command::new(bin())
        .args(["sim", "--config"])
        .arg(dir.join("sim.json"))
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("trajectory.csv").exists());

    write(
        &dir.join("sysid.json"),
        r#"{"horizon": 9, "lambda": 1.0, "confidence": {"s": 2.0, "delta": 0.05, "r": 1.0}, "t_total": 4000}"#,
    );
    let status = Command::new(bin())
        .args(["sysid", "--config"])
        .arg(dir.join("sysid.json"))
        .arg("--trajectory")
        .arg(dir.join("trajectory.csv"))
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("estimate.json").exists() && dir.join("diagnostics.json").exists());

    let status = Command::new(bin())
        .args(["realize", "--estimate"])
        .arg(dir.join("estimate.json"))
        .args(["--order", "1", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());

    let realized: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("realized.json")).unwrap()).unwrap();
    // Realized dynamics close to the truth (similarity is trivial at n = 1
    // up to sign, and the diagonal entry of A is similarity-invariant).
    let a = realized["a"][0][0].as_f64().unwrap();
    assert!((a - 0.5).abs() < 0.1, "realized a = {a}");
    assert!(realized["radii"]["b"].as_f64().unwrap() > 0.0);
    assert_eq!(realized["stable"], serde_json::Value::Bool(true));
}

#[test]
fn single_cell_experiment_writes_one_trace_and_summary() {
    let dir = scratch("single_cell");
    write(
        &dir.join("exp.json"),
        &format!(
            r#"{{
  "name": "single",
  "system": {SYSTEM_JSON},
  "algorithm": "ofu",
  "mode": "closed_loop",
  "cost": {{"q": [[1.0]], "r": [[1.0]]}},
  "t_grid": [900],
  "seeds": [5],
  "warmup": {{"rule": "fixed", "tau": 150}},
  "horizon": 7,
  "order": 1
}}"#
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["experiment", "--config"])
        .arg(dir.join("exp.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "summary.json".to_string(),
            "trace_T0000900_s0005.csv".to_string()
        ]
    );

    // The trace obeys the documented schema.
    let trace = std::fs::read_to_string(out.join("trace_T0000900_s0005.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "t,cost,comparator_cost,cum_regret");
    assert_eq!(lines.count(), 900);
}

#[test]
fn seeds_flag_overrides_config() {
    let dir = scratch("seed_override");
    write(
        &dir.join("exp.json"),
        &format!(
            r#"{{
  "name": "override",
  "system": {SYSTEM_JSON},
  "algorithm": "ofu",
  "mode": "closed_loop",
  "cost": {{"q": [[1.0]], "r": [[1.0]]}},
  "t_grid": [700],
  "seeds": [1, 2, 3],
  "warmup": {{"rule": "fixed", "tau": 120}},
  "horizon": 7,
  "order": 1
}}"#
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["experiment", "--config"])
        .arg(dir.join("exp.json"))
        .arg("--out")
        .arg(&out)
        .args(["--seeds", "9"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("trace_T0000700_s0009.csv").exists());
    assert!(!out.join("trace_T0000700_s0001.csv").exists());
}

#[test]
fn exit_codes_match_error_classes() {
    let dir = scratch("exit_codes");

    // Missing config file: config error, exit 1.
    let status = Command::new(bin())
        .args(["sim", "--config"])
        .arg(dir.join("missing.json"))
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Unstable system spec: rejected at construction, exit 1.
    write(
        &dir.join("unstable.json"),
        r#"{"system": {
            "n": 1, "m": 1, "p": 1,
            "a": [[1.2]], "b": [[1.0]], "c": [[1.0]], "f": [[0.0]],
            "noise": {"kind": "gaussian", "sub_gaussian_r": 1.0, "sigma_e": [[1.0]], "sigma_e_sq_lower": 1.0}
        }, "steps": 100}"#,
    );
    let status = Command::new(bin())
        .args(["sim", "--config"])
        .arg(dir.join("unstable.json"))
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Unknown flag: usage error, exit 1.
    let status = Command::new(bin())
        .args(["sim", "--bogus"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn all_cells_failing_exits_2() {
    // An order the Hankel split cannot carry makes every cell abort.
    let dir = scratch("all_fail");
    write(
        &dir.join("exp.json"),
        &format!(
            r#"{{
  "name": "doomed",
  "system": {SYSTEM_JSON},
  "algorithm": "ofu",
  "mode": "closed_loop",
  "cost": {{"q": [[1.0]], "r": [[1.0]]}},
  "t_grid": [600],
  "seeds": [1, 2],
  "warmup": {{"rule": "fixed", "tau": 120}},
  "horizon": 7,
  "order": 50
}}"#
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["experiment", "--config"])
        .arg(dir.join("exp.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // Aborts are recorded per cell in the summary.
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("aborted"));
}

#[test]
fn report_check_fails_with_exit_3() {
    let dir = scratch("report_check");
    write(
        &dir.join("exp.json"),
        &format!(
            r#"{{
  "name": "check_fail",
  "system": {SYSTEM_JSON},
  "algorithm": "ofu",
  "mode": "closed_loop",
  "cost": {{"q": [[1.0]], "r": [[1.0]]}},
  "t_grid": [600, 900, 1400],
  "seeds": [1, 2],
  "warmup": {{"rule": "fixed", "tau": 120}},
  "horizon": 7,
  "order": 1,
  "checks": {{"max_exponent": -5.0}}
}}"#
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["experiment", "--config"])
        .arg(dir.join("exp.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    // An impossible threshold must trip the check path.
    let status = Command::new(bin())
        .args(["report", "--dir"])
        .arg(&out)
        .arg("--check")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // Without --check the report is informational and succeeds.
    let status = Command::new(bin())
        .args(["report", "--dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
