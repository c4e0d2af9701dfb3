//! End-to-end runs of the `wpme` binary.

use std::path::Path;
use std::process::{Command, Output};

const WORKED_Q2: &str = "\
n_dim = 4
m = 2
p = 3
density.q = 2
density.k = 1
density.r0 = e^2
";

fn wpme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpme")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn feasibility_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q2.cfg", WORKED_Q2);
    let ok = wpme(&["feasibility", "-c", &cfg]);
    assert_eq!(ok.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(json["report"]["feasible"], true);

    let bad = wpme(&["feasibility", "-c", &cfg, "--set", "density.r0=e"]);
    assert_eq!(bad.status.code(), Some(3));
    let json: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(json["feasible"], false);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "n_dims = 4\n");
    let out = wpme(&["feasibility", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn verify_writes_report_and_worst_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q2.cfg", WORKED_Q2);
    let out_dir = dir.path().join("v");
    let out = wpme(&[
        "verify", "-c", &cfg, "--n-r", "100", "--n-t", "20", "--profile", "perturbed", "--seed", "3",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("worst_samples.csv")).unwrap();
    assert!(csv.starts_with("r,t,value,profile,region,residual,tolerance,margin\n"));
    assert_eq!(csv.lines().count(), 101);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["violations"], 0);
}

#[test]
fn seed_only_matters_for_perturbed_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q2.cfg", WORKED_Q2);
    let run = |seed: &str, profile: &str| {
        wpme(&["verify", "-c", &cfg, "--n-r", "60", "--n-t", "10", "--seed", seed, "--profile", profile]).stdout
    };
    assert_eq!(run("1", "exact"), run("2", "exact"));
    let with_envelope = format!("{WORKED_Q2}density.k1 = 1\ndensity.k2 = 1.5\n").replace("density.k = 1\n", "");
    let cfg2 = write_config(dir.path(), "env.cfg", &with_envelope);
    let run2 = |seed: &str| {
        wpme(&["verify", "-c", &cfg2, "--n-r", "60", "--n-t", "10", "--seed", seed, "--profile", "perturbed"]).stdout
    };
    assert_ne!(run2("1"), run2("2"));
}

#[test]
fn experiment_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q2.cfg",
        &format!("{WORKED_Q2}experiment.kind = global_existence_q2\nsolver.t_end = 1\nsolver.n_cells = 400\n"),
    );
    let out_dir = dir.path().join("e");
    let out = wpme(&["experiment", "-c", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "snapshots.csv", "series.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let series = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert!(series.starts_with("t,supnorm,front\n"));

    let infeasible = wpme(&["experiment", "-c", &cfg, "--set", "density.r0=e"]);
    assert_eq!(infeasible.status.code(), Some(3));

    let exploratory = wpme(&["experiment", "-c", &cfg, "--data-scale", "10"]);
    assert_eq!(exploratory.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&exploratory.stdout).unwrap();
    assert_eq!(json["status"], "exploratory");
}

#[test]
fn blowup_precondition_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sub.cfg",
        "n_dim = 4\nm = 2\np = 2\ndensity.q = 2\ndensity.k = 1\ndensity.form = exterior\nexperiment.kind = blowup_q2\n",
    );
    let out = wpme(&["experiment", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p > m"));
}

#[test]
fn simulate_and_sweep_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q2.cfg",
        &format!("{WORKED_Q2}solver.t_end = 0.5\nsolver.n_cells = 200\nsweep.p = 2.5, 3\nsweep.q = 2, 4\nsweep.t_end = 0.5\nsweep.n_cells = 200\n"),
    );
    let read = |name: &str, sub: &str| {
        let out_dir = dir.path().join(name);
        let out = wpme(&["simulate", "-c", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let sw = dir.path().join(format!("{name}.csv"));
        assert_eq!(wpme(&["sweep", "-c", &cfg, "--out", sw.to_str().unwrap()]).status.code(), Some(0));
        (std::fs::read(out_dir.join(sub)).unwrap(), std::fs::read(sw).unwrap())
    };
    let (snap_a, sweep_a) = read("a", "snapshots.csv");
    let (snap_b, sweep_b) = read("b", "snapshots.csv");
    assert_eq!(snap_a, snap_b);
    assert_eq!(sweep_a, sweep_b);
    assert_eq!(String::from_utf8(sweep_a).unwrap().lines().count(), 5);
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", &format!("{WORKED_Q2}sweep.p =\n"));
    let out = wpme(&["sweep", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}
