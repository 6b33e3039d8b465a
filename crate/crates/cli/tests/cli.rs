use std::process::{Command, Output};

use km_cli::{run, RunConfig};
use km_core::par::Execution;

fn km(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_km")).args(args).output().unwrap()
}

fn manifest(out: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().last().expect("manifest line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn lagrange_equal_masses() {
    let out = km(&["lagrange", "--mu", "0.5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 5);
    let l1 = v["points"].as_array().unwrap().iter().find(|p| p["label"] == "L1").unwrap();
    assert_eq!(l1["position"][0].as_f64().unwrap().abs(), 0.0);
    assert_eq!(v["kappa"].as_f64().unwrap(), -2.0);
    let m = manifest(&out);
    assert_eq!(m["command"], "lagrange");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["params"]["mu"], "0.5");
}

#[test]
fn hill_counts_components() {
    let out = km(&["hill", "--mu", "0", "--c", "-1.6", "--grid", "400"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["component_count"], 2);
}

#[test]
fn loopspace_table_json() {
    let out = km(&["homology", "loopspace", "--n", "2", "--action", "o2", "--max-deg", "6", "--m-range", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["action"], "O(2)");
    assert_eq!(v["entries"].as_array().unwrap().len(), 7);
    assert!(v["convention"]["tau_sign_rule"].is_string());
    assert_eq!(v["entries"][0]["free_rank"], 1);
}

#[test]
fn validation_errors_exit_one() {
    for args in [
        &["lagrange", "--mu", "1.5"][..],
        &["lagrange"],
        &["lagrange", "--mu", "0.1", "--bogus", "1"],
        &["lagrange", "--mu", "0.1", "--format", "svg"],
        &["starshape", "--mu", "0.1", "--c", "0.5"],
        &["homology", "group", "--m", "3", "--tau", "-1"],
        &["homology", "group", "--m", "40"],
        &["hill", "--mu", "abc", "--c", "-1.6"],
    ] {
        let out = km(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failed_check_exits_two() {
    // above kappa the earth and moon components merge and fibers cross the surface twice
    let out = km(&[
        "starshape", "--mu", "0.5", "--c", "-1.5", "--allow-above-kappa", "--bases", "20", "--rays", "16", "--grid", "200",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], false);
    assert_eq!(manifest(&out)["status"], "check failed");
}

#[test]
fn io_errors_exit_three() {
    let out = km(&["lagrange", "--mu", "0.1", "--config", "/nonexistent/km.conf"]);
    assert_eq!(out.status.code(), Some(3));
    let out = km(&["lagrange", "--mu", "0.1", "--out", "/nonexistent/dir/out.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# hill run\nmu = 0.2\nc = -1.9\ngrid = 120\n").unwrap();
    let conf = conf.to_str().unwrap();
    let from_file = RunConfig::from_args(["km", "hill", "--config", conf]).unwrap();
    assert_eq!(from_file.params["mu"], "0.2");
    assert_eq!(from_file.params["grid"], "120");
    let overridden = RunConfig::from_args(["km", "hill", "--config", conf, "--grid", "80"]).unwrap();
    assert_eq!(overridden.params["grid"], "80");
    assert_eq!(overridden.params["c"], "-1.9");

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "mu = 0.2\nc = -1.9\nsamples = 3\n").unwrap();
    let err = RunConfig::from_args(["km", "hill", "--config", bad.to_str().unwrap()]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn out_flag_and_extra_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("orbit.json");
    let traj = dir.path().join("traj.csv");
    let out = km(&[
        "symmetric", "--mu", "0", "--c", "-2.725", "--q1", "0.16", "--out", out_path.to_str().unwrap(),
        "--traj-out", traj.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!((v["q1"].as_f64().unwrap() - 0.16).abs() < 1e-8);
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.lines().count() > 10);
    let outputs = manifest(&out)["outputs"].as_array().unwrap().len();
    assert_eq!(outputs, 2);
}

#[test]
fn library_runs_match_modes() {
    let config = RunConfig::from_args(["km", "hill", "--mu", "0.3", "--c", "-1.7", "--grid", "150", "--format", "csv"]).unwrap();
    let a = run(&config, Execution::Sequential).unwrap();
    let b = run(&config, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.primary.lines().count(), 150);
}

#[test]
fn numbers_use_seventeen_digits() {
    let out = km(&["lagrange", "--mu", "0.5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("-1.3750000000000002"), "{text}");
}
