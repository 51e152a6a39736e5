use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nqmlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nqmlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("NQMLAB_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn evolve_writes_series_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nqmlab(tmp.path(), &["evolve", "--out", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let run = tmp.path().join("run");
    let direct = fs::read_to_string(run.join("direct.csv")).unwrap();
    assert!(direct.starts_with("t,x,re,im\n"));
    // 11 snapshots of 256 points plus the header.
    assert_eq!(direct.lines().count(), 1 + 11 * 256);
    let divergence = fs::read_to_string(run.join("divergence.csv")).unwrap();
    assert_eq!(divergence.lines().count(), 1 + 11);
    assert!(run.join("induced.csv").exists());
    let report = read_json(&run.join("evolve.json"));
    let names: Vec<_> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["check_name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names, ["unitarity", "divergence-rate"]);
}

#[test]
fn sweep_beta_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nqmlab(tmp.path(), &["sweep-beta", "--out", "s"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(tmp.path().join("s/beta_sweep.csv")).unwrap();
    assert!(csv.starts_with("beta,beta_hat,abs_error\n"));
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn empty_beta_list_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"betas": []}"#).unwrap();
    let out = nqmlab(
        tmp.path(),
        &["sweep-beta", "--config", "c.json", "--out", "s"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn under_resolved_recovery_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.json"),
        r#"{"grid": {"n": 8, "periods": 2}}"#,
    )
    .unwrap();
    let out = nqmlab(tmp.path(), &["recover", "--config", "c.json", "--out", "r"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nqmlab:"));
}

#[test]
fn unstable_rk4_step_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.json"),
        r#"{"evolution": {"scheme": "rk4-spectral", "dt": 0.1, "steps": 10}}"#,
    )
    .unwrap();
    let out = nqmlab(tmp.path(), &["evolve", "--config", "c.json", "--out", "e"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn json_flag_prints_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.json"),
        r#"{"checks": ["eigenvalue", "q1"]}"#,
    )
    .unwrap();
    let out = nqmlab(
        tmp.path(),
        &["verify", "--config", "c.json", "--json", "--out", "v"],
    );
    assert_eq!(code(&out), 0);
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, read_json(&tmp.path().join("v/verify.json")));
    assert_eq!(printed["checks"].as_array().unwrap().len(), 2);
    assert_eq!(printed["overall_pass"], true);
}

#[test]
fn commutator_selection_yields_one_report_per_power() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.json"),
        r#"{"checks": ["commutator"], "commutator": {"powers": [1, 2, 3]}}"#,
    )
    .unwrap();
    let out = nqmlab(tmp.path(), &["verify", "--config", "c.json", "--out", "v"]);
    assert_eq!(code(&out), 0);
    let report = read_json(&tmp.path().join("v/verify.json"));
    let powers: Vec<_> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["params"]["n"].as_u64().unwrap())
        .collect();
    assert_eq!(powers, [1, 2, 3]);
}

#[test]
fn flag_overrides_reach_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.json"),
        r#"{"checks": ["eigenvalue"], "grid": {"n": 64}}"#,
    )
    .unwrap();
    let out = nqmlab(
        tmp.path(),
        &[
            "verify", "--config", "c.json", "--grid-n", "128", "--p", "-2", "--out", "v",
        ],
    );
    assert_eq!(code(&out), 0);
    let report = read_json(&tmp.path().join("v/verify.json"));
    assert_eq!(report["config"]["grid"]["n"], 128);
    assert_eq!(report["config"]["state"]["p"], -2.0);
    assert_eq!(report["checks"][0]["grid"]["n"], 128);
}

#[test]
fn output_directory_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"checks": ["q1"]}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nqmlab"))
        .args(["verify", "--config", "c.json"])
        .current_dir(tmp.path())
        .env("NQMLAB_OUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(tmp.path().join("from-env/verify.json").exists());
}

#[test]
fn usage_errors_and_help() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&nqmlab(tmp.path(), &["verify", "--bogus"])), 2);
    assert_eq!(
        code(&nqmlab(tmp.path(), &["verify", "--tol", "nonsense"])),
        2
    );
    assert_eq!(
        code(&nqmlab(tmp.path(), &["verify", "--tol", "no-such=1e-3"])),
        2
    );
    assert_eq!(code(&nqmlab(tmp.path(), &["--help"])), 0);
    assert_eq!(code(&nqmlab(tmp.path(), &["--version"])), 0);
}

#[test]
fn failing_tolerance_flag_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"checks": ["eigenvalue"]}"#).unwrap();
    let out = nqmlab(
        tmp.path(),
        &[
            "verify",
            "--config",
            "c.json",
            "--tol",
            "eigenvalue=1e-30",
            "--out",
            "v",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL eigenvalue"));
}
