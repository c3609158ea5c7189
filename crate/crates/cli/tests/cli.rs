//! End-to-end runs of the `benard` binary: artifact layout, reproducibility
//! and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn benard() -> Command {
    Command::new(env!("CARGO_BIN_EXE_benard"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("missing {name} in {}: {e}", dir.display()))
}

fn run_dir(root: &Path, name: &str) -> PathBuf {
    root.join(name)
}

#[test]
fn critical_free_free_emits_the_known_value() {
    let out = tempfile::tempdir().unwrap();
    let status = benard()
        .args(["critical", "--bc", "free-free", "--out"])
        .arg(out.path())
        .args(["--name", "crit"])
        .status()
        .unwrap();
    assert!(status.success());
    let dir = run_dir(out.path(), "crit");
    let crit = read(&dir, "critical.csv");
    let r_c: f64 = crit
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((r_c - 657.5114).abs() < 0.1, "critical.csv: {crit}");
    let curve = read(&dir, "neutral_curve.csv");
    assert!(curve.lines().count() > 60);
    assert!(dir.join("manifest.txt").exists());
}

#[test]
fn reduce_reports_positive_alpha_and_s1_verdict() {
    let out = tempfile::tempdir().unwrap();
    let status = benard()
        .args([
            "reduce",
            "--bc",
            "free-free",
            "--r-ratio",
            "1.05",
            "--j-max",
            "8",
            "--out",
        ])
        .arg(out.path())
        .args(["--name", "red"])
        .status()
        .unwrap();
    assert!(status.success());
    let dir = run_dir(out.path(), "red");
    let verdict = read(&dir, "verdict.txt");
    assert!(verdict.contains("S1 attractor bifurcation"), "{verdict}");
    let reduced = read(&dir, "reduced.csv");
    let alpha: f64 = reduced
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!(alpha > 0.0);
    // rigid-rigid row at R_c: beta1 = 0 to solver accuracy
    let status = benard()
        .args([
            "reduce",
            "--bc",
            "rigid-rigid",
            "--r-ratio",
            "1.0",
            "--j-max",
            "8",
            "--out",
        ])
        .arg(out.path())
        .args(["--name", "red-rr"])
        .status()
        .unwrap();
    assert!(status.success());
    let reduced = read(&run_dir(out.path(), "red-rr"), "reduced.csv");
    let beta1: f64 = reduced
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(beta1.abs() < 1e-4, "beta1 at R_c: {beta1}");
}

#[test]
fn sweep_is_deterministic_and_scales_correctly() {
    let out = tempfile::tempdir().unwrap();
    for name in ["s1", "s2"] {
        let status = benard()
            .args(["sweep", "--bc", "free-free", "--seed", "42", "--out"])
            .arg(out.path())
            .args(["--name", name])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(run_dir(out.path(), "s1").join("sweep.csv")).unwrap();
    let b = std::fs::read(run_dir(out.path(), "s2").join("sweep.csv")).unwrap();
    assert_eq!(a, b, "sweep.csv must be byte-identical across reruns");
    // equal hashes inside the manifests
    let ma = read(&run_dir(out.path(), "s1"), "manifest.txt");
    let mb = read(&run_dir(out.path(), "s2"), "manifest.txt");
    let hash = |m: &str| {
        m.lines()
            .find(|l| l.starts_with("sweep.csv"))
            .unwrap()
            .to_string()
    };
    assert_eq!(hash(&ma), hash(&mb));
    let exp_line = ma
        .lines()
        .find(|l| l.starts_with("exponent"))
        .expect("exponent recorded");
    let exponent: f64 = exp_line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((exponent - 0.5).abs() < 0.02, "{exp_line}");

    // a subcritical sweep produces only zero amplitudes
    let status = benard()
        .args([
            "sweep",
            "--bc",
            "free-free",
            "--ratios",
            "0.90:0.98:4",
            "--out",
        ])
        .arg(out.path())
        .args(["--name", "sub"])
        .status()
        .unwrap();
    assert!(status.success());
    let sub = read(&run_dir(out.path(), "sub"), "sweep.csv");
    assert!(sub.starts_with("ratio,R,beta1,alpha,amplitude\n"));
    for line in sub.lines().skip(1) {
        let amp: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(amp, 0.0, "{line}");
    }
}

#[test]
fn simulate_classify_report_pipeline() {
    let out = tempfile::tempdir().unwrap();
    let status = benard()
        .args([
            "simulate",
            "--bc",
            "free-free",
            "--r-ratio",
            "1.05",
            "--k-max",
            "3",
            "--j-max",
            "5",
            "--dt",
            "5e-3",
            "--horizon",
            "200",
            "--steady-tol",
            "1e-8",
            "--ic",
            "symmetric",
            "--out",
        ])
        .arg(out.path())
        .args(["--name", "sim"])
        .status()
        .unwrap();
    assert!(status.success());
    let sim = run_dir(out.path(), "sim");
    let traj = read(&sim, "trajectory.csv");
    assert!(traj.starts_with("t,norm,r,theta,M\n"));
    assert!(sim.join("field_final.snap").exists());

    let status = benard()
        .args(["classify", "--snapshot"])
        .arg(sim.join("field_final.snap"))
        .arg("--out")
        .arg(out.path())
        .args(["--name", "cls"])
        .status()
        .unwrap();
    assert!(status.success());
    let cls = run_dir(out.path(), "cls");
    let report = read(&cls, "report.txt");
    assert!(report.contains("regime: PureRolls"), "{report}");
    assert!(cls.join("topology.svg").exists());
    assert!(cls.join("separatrices.csv").exists());

    // the report command verifies both manifests
    for dir in [&sim, &cls] {
        let status = benard().args(["report", "--run"]).arg(dir).status().unwrap();
        assert!(status.success());
    }
    // tampering makes report fail with the runtime code
    std::fs::write(sim.join("trajectory.csv"), "tampered\n").unwrap();
    let status = benard().args(["report", "--run"]).arg(&sim).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn eigs_emits_tables_and_respects_the_output_env_var() {
    let out = tempfile::tempdir().unwrap();
    let status = benard()
        .env("BENARD_OUT", out.path())
        .args([
            "eigs",
            "--bc",
            "rigid-rigid",
            "--r-ratio",
            "1.0",
            "--k-max",
            "2",
            "--j-max",
            "4",
            "--name",
            "e",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let dir = run_dir(out.path(), "e");
    let eig = read(&dir, "eigenvalues.csv");
    assert!(eig.starts_with("k,j,beta\n"));
    // the leading rigid-rigid eigenvalue at (a_c, R_c) is neutral
    let beta11: f64 = eig
        .lines()
        .find(|l| l.starts_with("1,1,"))
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(beta11.abs() < 1e-4, "beta_11 = {beta11}");
    let prof = read(&dir, "profiles.csv");
    assert!(prof.starts_with("x2,h,dh,theta\n"));
    assert!(prof.lines().count() > 10);
}

#[test]
fn config_file_with_flag_overrides() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("run.conf");
    std::fs::write(
        &cfg,
        "[domain]\nbc = free-free\nr_ratio = 1.01\n[truncation]\nj_max = 6\n",
    )
    .unwrap();
    let status = benard()
        .args(["--config"])
        .arg(&cfg)
        .args(["reduce", "--r-ratio", "1.05", "--out"])
        .arg(out.path())
        .args(["--name", "red"])
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = read(&run_dir(out.path(), "red"), "manifest.txt");
    // the flag overrode the file value
    assert!(manifest.contains("r_ratio = 1.05"), "{manifest}");
    assert!(manifest.contains("j_max = 6"));
}

#[test]
fn invalid_inputs_exit_with_code_3() {
    let out = tempfile::tempdir().unwrap();
    let status = benard()
        .args(["critical", "--bc", "slippery", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    let status = benard()
        .args(["simulate", "--ic", "bogus", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn missing_snapshot_exits_with_code_2() {
    let out = tempfile::tempdir().unwrap();
    let status = benard()
        .args(["classify", "--snapshot", "/nonexistent.snap", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
