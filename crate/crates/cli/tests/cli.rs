use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ddi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tiny_config(dir: &Path, kind: &str) -> String {
    let path = dir.join("study.cfg");
    let text = format!(
        "kind = {kind}\nbays = 2\nwidth = 1\nlevels = 1\nt_end = 12\npoints = 16, 64\nruns = 2\n"
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn relaxation_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ddi(&["relaxation", "--out", out, "--steps", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("relaxation.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("step,time,stress,exact,relative_deviation\n"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("175000.000000"));
}

#[test]
fn oracle_check_passes() {
    let o = ddi(&["oracle-check", "--instances", "25"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("oracle not stationary     0"));
}

#[test]
fn visco_run_with_history_matching() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "visco");
    let out = dir.path().join("out");
    let o = ddi(&[
        "visco",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--history-matching",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "visco_trajectory.csv",
        "visco_reference.csv",
        "visco_probes.csv",
        "visco_history_matching.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let probes = fs::read_to_string(out.join("visco_probes.csv")).unwrap();
    assert_eq!(
        probes.lines().next().unwrap(),
        "time,tip_deflection,tip_deflection_ref,bar_force,bar_force_ref"
    );
    assert_eq!(probes.lines().count(), 14);
}

#[test]
fn convergence_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "visco");
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = ddi(&[
            "convergence",
            "--kind",
            "plastic",
            "--config",
            &cfg,
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read_to_string(out.join("convergence_plastic.csv")).unwrap(),
            fs::read_to_string(out.join("runs_plastic.csv")).unwrap(),
        )
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(a.0.lines().count(), 3);
    assert_eq!(a.1.lines().count(), 5);
    let slope = fs::read_to_string(dir.path().join("a/slope_plastic.csv")).unwrap();
    assert!(slope
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("plastic,bounded_variation,"));
}

#[test]
fn bad_input_fails_cleanly() {
    assert!(!ddi(&["convergence", "--kind", "elastic"]).status.success());
    let o = ddi(&["visco", "--points", "64,32"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("strictly increasing"));
    let o = ddi(&["visco", "--config", "/nonexistent/study.cfg"]);
    assert!(!o.status.success());
}
