use std::path::Path;
use std::process::{Command, Output};

fn stdf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stdf"))
        .args(args)
        .env_remove("STDF_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = stdf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    ok(&["simulate", "--model", "logistic", "--theta", "0.7", "--n", "300", "--seed", seed, "--out", p(&out)]);
    out
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", "7");
    let b = simulate(dir.path(), "b.csv", "7");
    let c = simulate(dir.path(), "c.csv", "8");
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_ne!(bytes, std::fs::read(&c).unwrap());
    assert!(String::from_utf8(bytes).unwrap().starts_with("x1,x2\n"));
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", "11");
    let manifest = dir.path().join("a.csv.manifest.json");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["config"]["seed"], 11);
    let b = dir.path().join("b.csv");
    ok(&["simulate", "--config", p(&manifest), "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    // A manifest from another command is refused.
    let out = stdf(&["ranks", "--config", p(&manifest), "--out", p(&dir.path().join("r.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn beta_estimate_recovers_margin() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", "3");
    let grid = dir.path().join("grid.csv");
    std::fs::write(&grid, "x1,x2\n0.3,0\n1,1\n").unwrap();
    let est = dir.path().join("est.csv");
    ok(&["estimate", "--input", p(&data), "--k", "30", "--estimator", "beta", "--grid", p(&grid), "--out", p(&est)]);
    let text = std::fs::read_to_string(&est).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,estimator,estimate"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[2], "beta");
    let v: f64 = first[3].parse().unwrap();
    assert!((v - 0.3).abs() < 1e-12, "{v}");
}

#[test]
fn exit_codes() {
    assert_eq!(stdf(&["--help"]).status.code(), Some(0));
    assert_eq!(stdf(&["--version"]).status.code(), Some(0));
    assert_eq!(stdf(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(stdf(&["simulate", "--model", "logistic", "--out", "x.csv"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let out = stdf(&[
        "simulate", "--model", "logistic", "--theta", "1.5", "--n", "10", "--seed", "1", "--out",
        p(&dir.path().join("x.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(err["error"], "domain");

    let missing = stdf(&["ranks", "--input", p(&dir.path().join("nope.csv")), "--out", p(&dir.path().join("r.csv"))]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn fit_writes_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    ok(&["simulate", "--model", "logistic", "--theta", "0.5", "--n", "2000", "--seed", "5", "--out", p(&data)]);
    let out = dir.path().join("fit.json");
    ok(&["fit", "--input", p(&data), "--k", "200", "--out", p(&out)]);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["parameters"][0], "theta");
    let theta = v["theta_hat"][0].as_f64().unwrap();
    assert!((theta - 0.5).abs() < 0.1, "{theta}");
}

#[test]
fn bootstrap_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", "9");
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--threads", threads, "bootstrap", "--input", p(&data), "--method", "multiplier", "--k", "30", "-B", "50",
            "--seed", "2", "--out", p(&out),
        ]);
        std::fs::read(out).unwrap()
    };
    let one = run("1", "one.csv");
    assert_eq!(one, run("4", "four.csv"));
    assert!(String::from_utf8(one).unwrap().starts_with("point,pi/8,2pi/8,3pi/8\n"));
}

#[test]
fn study_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.json");
    std::fs::write(
        &cfg,
        r#"{"mode":"mse","model":{"model":"logistic","theta":0.7},"n":100,"replications":20,"seed":1,"k_values":[10,20]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&["study", "--config", p(&cfg), "--out", p(&out)]);
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("mode,estimator,k,metric,value,stderr\n"));
    assert!(csv.contains("mse,beta_minus_empirical,20,variance,"));

    let again = dir.path().join("again");
    ok(&["study", "--config", p(&out.join("manifest.json")), "--out", p(&again)]);
    assert_eq!(csv, std::fs::read_to_string(again.join("results.csv")).unwrap());

    assert_eq!(stdf(&["study", "--out", p(&out)]).status.code(), Some(1));
}
