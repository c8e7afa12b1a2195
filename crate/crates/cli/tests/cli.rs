//! End-to-end tests of the `cascade` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// A scratch directory holding a copy of every fixture.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}

fn cascade(args: &[&Path]) -> Output {
    cascade_env(args, &[])
}

fn cascade_env(args: &[&Path], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cascade"));
    cmd.args(args).env_remove("CASCADE_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn cmd(name: &str) -> PathBuf {
    PathBuf::from(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn two_bank_run_writes_reproducible_artifacts() {
    let dir = workspace();
    let config = dir.path().join("en_two_bank.json");
    let out = cascade(&[&cmd("run"), &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/summary.json")).unwrap()).unwrap();
    let banks = summary["banks"].as_array().unwrap();
    assert_eq!(banks[0]["p"], 0.5);
    assert_eq!(banks[1]["p"], 0.0);
    assert_eq!(banks[1]["q"], 1.0);
    assert_eq!(banks[0]["E"], 0.0);
    assert_eq!(banks[1]["E"], 2.0);
    assert_eq!(summary["days"], 1);
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["audit"]["passed"], true);
    assert_eq!(summary["counts"]["insolvent"], 1);

    let trajectory = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(trajectory.starts_with("day,bank,p,p_tilde,q,q_tilde,E,C,Delta,Sigma,Z,A,X,D\n"));
    assert!(trajectory.contains("\n1,0,0.5,0,0,1,0,0,-5,0,0,5,5,0\n"), "{trajectory}");

    let names = ["summary.json", "trajectory.csv", "market.csv", "audit.jsonl"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(dir.path().join("out").join(n)).unwrap()).collect();
    assert!(cascade(&[&cmd("run"), &config]).status.success());
    for (n, bytes) in names.iter().zip(&first) {
        assert_eq!(&std::fs::read(dir.path().join("out").join(n)).unwrap(), bytes, "{n} changed");
    }
    let audit = std::fs::read_to_string(dir.path().join("out/audit.jsonl")).unwrap();
    assert_eq!(audit.lines().count(), 2);
}

#[test]
fn zero_trigger_is_quiet() {
    let dir = workspace();
    let text = std::fs::read_to_string(dir.path().join("generated_sl.json")).unwrap();
    let quiet = text.replace("\"asset_loss\": 0.3, \"withdrawal\": 0.4", "\"asset_loss\": 0, \"withdrawal\": 0");
    let config = write(dir.path(), "quiet.json", &quiet);
    let out = cascade(&[&cmd("run"), &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["counts"]["impaired"], 0);
    assert_eq!(summary["days"], 0);
    assert_eq!(summary["total_equity_loss"], 0.0);
}

#[test]
fn malformed_config_fails_without_artifacts() {
    let dir = workspace();
    let text = std::fs::read_to_string(dir.path().join("en_two_bank.json")).unwrap();
    let config = write(dir.path(), "typo.json", &text.replace("\"model\"", "\"modle\""));
    let out = cascade(&[&cmd("run"), &config]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");
    assert!(!dir.path().join("out").exists());

    let not_json = write(dir.path(), "broken.json", "{\"version\": 1,");
    assert_eq!(cascade(&[&cmd("run"), &not_json]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(cascade(&[&cmd("run"), &missing]).status.code(), Some(2));
}

#[test]
fn invalid_system_fails_validation_without_artifacts() {
    let dir = workspace();
    let system = std::fs::read_to_string(dir.path().join("two_bank_system.json")).unwrap();
    write(dir.path(), "two_bank_system.json", &system.replace("\"E\": 7", "\"E\": 8"));
    let out = cascade(&[&cmd("run"), &dir.path().join("en_two_bank.json")]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "validation");
    assert!(err["message"].as_str().unwrap().contains("identity"));
    assert!(!dir.path().join("out").exists());

    let check = cascade(&[&cmd("validate"), &dir.path().join("two_bank_system.json")]);
    assert_eq!(check.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(report["valid"], false);
}

#[test]
fn validate_accepts_the_fixture() {
    let out = cascade(&[&cmd("validate"), &fixtures().join("two_bank_system.json")]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], true);
    // bank 0 has negative equity: a valid post-trigger system, but not a nominal one
    assert_eq!(report["nominal"], false);
}

#[test]
fn budget_exhaustion_exits_with_non_convergence() {
    let dir = workspace();
    let text = std::fs::read_to_string(dir.path().join("en_two_bank.json")).unwrap();
    let config = write(
        dir.path(),
        "short.json",
        &text.replace("\"model\": \"en\",", "\"model\": \"en\", \"solver\": {\"max_iter\": 1},"),
    );
    let out = cascade(&[&cmd("run"), &config]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "non_convergence");
    // the last iterate is still reported
    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], false);
}

fn diff_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "bank,d_p,d_p_tilde,d_q,d_q_tilde,d_E,d_C,extra_equity_loss,d_pi,d_pi_tilde,d_days"
    );
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

fn all_zero(rows: &[Vec<String>], tol: f64) -> bool {
    rows.iter()
        .flat_map(|r| r[1..].iter())
        .filter(|c| !c.is_empty())
        .all(|c| c.parse::<f64>().unwrap().abs() <= tol)
}

#[test]
fn compare_identical_and_degenerate_runs() {
    let dir = workspace();
    let sl = dir.path().join("generated_sl.json");
    let rows = diff_rows(&cascade(&[&cmd("compare"), &sl, &sl]));
    assert_eq!(rows.len(), 31);
    assert_eq!(rows[30][0], "total");
    assert!(all_zero(&rows, 0.0));

    let text = std::fs::read_to_string(&sl).unwrap();
    let esl0 = write(
        dir.path(),
        "esl0.json",
        &text.replace("\"model\": \"sl\",", "\"model\": \"esl\", \"impact\": {},"),
    );
    assert!(all_zero(&diff_rows(&cascade(&[&cmd("compare"), &sl, &esl0])), 1e-12));
}

#[test]
fn fire_sales_add_equity_losses() {
    let dir = workspace();
    let sl = dir.path().join("generated_sl.json");
    let text = std::fs::read_to_string(&sl).unwrap();
    let esl = write(
        dir.path(),
        "esl.json",
        &text.replace("\"model\": \"sl\",", "\"model\": \"esl\", \"impact\": {\"alpha\": \"default\"},"),
    );
    let rows = diff_rows(&cascade(&[&cmd("compare"), &sl, &esl]));
    let total = rows.last().unwrap();
    let extra: f64 = total[7].parse().unwrap();
    assert!(extra > 0.0, "extra loss {extra}");
    for r in &rows[..rows.len() - 1] {
        assert!(r[7].parse::<f64>().unwrap() >= -1e-9, "bank {} gains from fire sales", r[0]);
    }
    assert!(total[8].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn compare_rejects_different_sizes() {
    let dir = workspace();
    let out = cascade(&[&cmd("compare"), &dir.path().join("en_two_bank.json"), &dir.path().join("generated_sl.json")]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["error"], "incompatible_runs");
}

#[test]
fn generate_round_trips_through_validate() {
    let dir = workspace();
    let spec = write(
        dir.path(),
        "gen.json",
        r#"{
            "version": 1,
            "network": {"n_banks": 12, "topology": {"kind": "core_periphery", "n_core": 3, "p_cc": 1, "p_cp": 0.3, "p_pp": 0.05},
                        "exposure_scale": {"mean": 5, "dispersion": 1}, "seed": 9},
            "sparse": true,
            "output": "generated/system.json"
        }"#,
    );
    let out = cascade(&[&cmd("generate"), &spec]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let system = dir.path().join("generated/system.json");
    let check = cascade(&[&cmd("validate"), &system]);
    assert!(check.status.success());
    let report: Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(report["nominal"], true);
    assert_eq!(report["n_banks"], 12);

    let first = std::fs::read(&system).unwrap();
    assert!(cascade(&[&cmd("generate"), &spec]).status.success());
    assert_eq!(std::fs::read(&system).unwrap(), first);
}

#[test]
fn monte_carlo_is_independent_of_worker_count() {
    let dir = workspace();
    let config = dir.path().join("monte_carlo.json");
    let one = cascade_env(&[&cmd("run"), &config], &[("CASCADE_WORKERS", "1")]);
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    let csv1 = std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    let json1 = std::fs::read(dir.path().join("out/summary.json")).unwrap();

    let four = cascade_env(&[&cmd("run"), &config], &[("CASCADE_WORKERS", "4")]);
    assert!(four.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap(), csv1);
    assert_eq!(std::fs::read(dir.path().join("out/summary.json")).unwrap(), json1);

    let lines: Vec<&str> = csv1.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("label,model,runs,non_converged,defaults_mean,"));
    assert!(lines[1].starts_with("sl,sl,12,0,"));
    assert!(lines[2].starts_with("\"esl, fire sales\",esl,12,0,"));

    let bad = cascade_env(&[&cmd("run"), &config], &[("CASCADE_WORKERS", "zero")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn esl_without_impact_is_a_config_error() {
    let dir = workspace();
    let text = std::fs::read_to_string(dir.path().join("en_two_bank.json")).unwrap();
    let config = write(dir.path(), "esl.json", &text.replace("\"en\"", "\"esl\""));
    let out = cascade(&[&cmd("run"), &config]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("impact"));
}
