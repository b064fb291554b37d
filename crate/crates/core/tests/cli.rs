use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ndslab"));
    c.env_remove("NDSLAB_OUT");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
}

fn run(name: &str, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(fixture(name))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fixtures_lists_shipped_scenarios() {
    let out = bin().arg("fixtures").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 9);
    for name in [
        "example3",
        "power_family",
        "constant_family",
        "contraction",
        "conjugate_pair",
        "negative",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(name)),
            "{name} missing from:\n{text}"
        );
    }
}

#[test]
fn fixtures_export_matches_shipped_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fixtures", "--export"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let exported = fs::read_to_string(dir.path().join("identities.json")).unwrap();
    assert_eq!(exported, fs::read_to_string(fixture("identities")).unwrap());
}

#[test]
fn identities_pass_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("identities", dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    for (i, check) in ["check_split", "check_periodic", "check_induced"]
        .iter()
        .enumerate()
    {
        let r = report(&dir.path().join(format!("identities/{i:02}_{check}.json")));
        assert_eq!(r["passed"], Value::Bool(true));
        assert_eq!(r["max_defect"].as_f64(), Some(0.0));
        assert_eq!(r["schema"], Value::from(1));
    }
}

#[test]
fn negative_fixtures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["negative", "example3_negative", "rotation_aperiodic"] {
        let out = run(name, dir.path(), &[]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        let summary = report(&dir.path().join(name).join("summary.json"));
        assert_eq!(summary["passed"], Value::Bool(false));
        assert_eq!(summary["tasks"][0]["status"], Value::from("failed"));
    }
}

#[test]
fn kempf_contraction_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("kempf_contraction", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir.path().join("kempf_contraction/00_check_kempf.json"));
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(r["max_defect"].as_f64().unwrap() < 1e-4);
}

#[test]
fn bad_scenario_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"name": "bad", "space": {"kind": "interval", "lo": 0, "hi": 1},
            "sequence": {"rule": "family", "family": {"name": "power"}},
            "tasks": [{"task": "check_induced", "gamma": [3, 2]}]}"#,
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("tasks[0].gamma") && err.contains("gamma not increasing"),
        "{err}"
    );
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn run_accepts_fixture_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "constant_family", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("constant_family/summary.json").is_file());
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_out = dir.path().join("from_scenario");
    let env_out = dir.path().join("from_env");
    let flag_out = dir.path().join("from_flag");
    let text = fs::read_to_string(fixture("identities")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["output"] = Value::from(scenario_out.display().to_string());
    let path = dir.path().join("with_output.json");
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();

    let status = bin().arg("run").arg(&path).output().unwrap().status;
    assert!(status.success());
    assert!(scenario_out.join("identities/summary.json").is_file());

    let status = bin()
        .arg("run")
        .arg(&path)
        .env("NDSLAB_OUT", &env_out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(env_out.join("identities/summary.json").is_file());

    let status = bin()
        .arg("run")
        .arg(&path)
        .env("NDSLAB_OUT", &env_out)
        .arg("--out")
        .arg(&flag_out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(flag_out.join("identities/summary.json").is_file());
}

#[test]
fn tol_flag_overrides_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("kempf_contraction", dir.path(), &["--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&dir.path().join("kempf_contraction/00_check_kempf.json"));
    assert_eq!(r["tolerance"].as_f64(), Some(1e-12));
    assert_eq!(r["passed"], Value::Bool(false));

    let out = run("negative", dir.path(), &["--tol", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn threads_flag_rejects_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("identities", dir.path(), &["--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_subcommand_prints_summaries() {
    let dir = tempfile::tempdir().unwrap();
    run("identities", dir.path(), &[]);
    run("negative", dir.path(), &[]);
    let out = bin().arg("report").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("identities [PASS]"), "{text}");
    assert!(text.contains("negative [FAIL]"), "{text}");
    assert!(text.contains("check_conjugacy"));

    let empty = tempfile::tempdir().unwrap();
    let out = bin().arg("report").arg(empty.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
