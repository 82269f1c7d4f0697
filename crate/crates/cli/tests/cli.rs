use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 3
dim = 1
sigma = 0.25
tau = 0.25
T = 1.0
n_list = [8, 16]
replicas = 2

[fitness]
kind = "gaussian_bump"
f_lo = 1.0
f_hi = 2.0
s = 1.0

[initial]
kind = "normal"

[reference]
cells = 256

[rate_tau]
tau_list = [0.25, 0.125]
refine = 2

[trace]
n = 16
replicas = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kinetic-ga"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn dist_prints_one_number() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.msr", "0.5 0\n0.5 1\n");
    write(dir.path(), "b.msr", "1 0.5\n");
    let o = run(&["dist", "a.msr", "b.msr", "--cost", "truncated"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1);
    let v: f64 = lines[0].trim().parse().unwrap();
    assert!((v - 0.5).abs() < 1e-12);
}

#[test]
fn dist_costs_and_plan_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.msr", "1 0\n");
    write(dir.path(), "b.msr", "1 3\n");
    let value = |cost: &str| -> f64 {
        let o = run(&["dist", "a.msr", "b.msr", "--cost", cost], dir.path());
        assert_eq!(o.status.code(), Some(0));
        stdout(&o).trim().parse().unwrap()
    };
    assert!((value("euclidean") - 3.0).abs() < 1e-12);
    assert!((value("truncated") - 1.0).abs() < 1e-12);
    assert!((value("indicator") - 1.0).abs() < 1e-12);

    let o = run(&["dist", "a.msr", "b.msr", "--plan", "plan.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let plan = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    assert!(plan.starts_with("i,j,mass\n0,0,"));
}

#[test]
fn dist_rejects_bad_measure() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.msr", "0.5 0\n0.2 1\n");
    write(dir.path(), "b.msr", "1 0\n");
    let o = run(&["dist", "a.msr", "b.msr"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["dist", "missing.msr", "b.msr"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(64));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn invalid_config_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.toml", &CONFIG.replace("tau = 0.25", "tau = 1.5"));
    let o = run(&["--config", "bad.toml", "--out", "run", "rate-n"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));
    assert!(!dir.path().join("run").exists());

    let o = run(&["--out", "run", "simulate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn rate_n_is_deterministic_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CONFIG);
    for out in ["r1", "r2"] {
        let o = run(&["--config", "c.toml", "--seed", "7", "--out", out, "rate-n"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("r1/rate_n.csv")).unwrap();
    let b = std::fs::read(dir.path().join("r2/rate_n.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&a).starts_with("param,mean_err,stderr,epsilon,slope_running\n"));

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("r1/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["command"], "rate-n");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(files.contains(&"rate_n.csv"));
    assert!(files.contains(&"rate_n.json"));
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CONFIG);
    for (out, seed) in [("a", "1"), ("b", "2")] {
        let o = run(&["--config", "c.toml", "--seed", seed, "--out", out, "simulate"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn simulate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CONFIG);
    let o = run(
        &["--config", "c.toml", "--out", "sim", "--threads", "1", "simulate", "--snapshot-stride", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let sim = dir.path().join("sim");
    let traj = std::fs::read_to_string(sim.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("step,mean_1,m2,mq,best_fitness\n"));
    assert_eq!(traj.lines().count(), 1 + 5);
    let trace = std::fs::read_to_string(sim.join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,E_n,bl_emp\n0,0,0\n"));
    let grid = std::fs::read_to_string(sim.join("reference_final.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 256);
    for step in [0, 2, 4] {
        assert!(sim.join(format!("snapshots/step_{step:05}.msr")).exists());
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(sim.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["e0_zero"], true);
    assert_eq!(summary["pass"], true);
}

#[test]
fn simulate_ensemble_reference() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CONFIG);
    let o = run(
        &["--config", "c.toml", "--out", "sim", "simulate", "--reference", "ensemble"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("sim/reference_final.msr").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CONFIG);
    for (out, threads) in [("t1", "1"), ("t3", "3")] {
        let o = run(&["--config", "c.toml", "--out", out, "--threads", threads, "rate-n"], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(dir.path().join("t1/rate_n.csv")).unwrap(),
        std::fs::read(dir.path().join("t3/rate_n.csv")).unwrap()
    );
}

#[test]
fn rate_tau_runs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", CONFIG);
    let o = run(&["--config", "c.toml", "--out", "rt", "rate-tau"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rt/rate_tau.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2);
}

#[test]
fn couple_test_writes_plan_and_joint() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ref.msr", "0.5 0\n0.5 1\n");
    write(dir.path(), "pop.msr", "0.25 0\n0.75 1\n");
    let o = run(
        &["--out", "ct", "couple-test", "ref.msr", "pop.msr", "--draws", "20000"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("ct/couple_test.json")).unwrap()).unwrap();
    assert!((report["plan_cost"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!(report["tv"].as_f64().unwrap() < 0.02);
    assert!(dir.path().join("ct/plan.csv").exists());
    assert!(dir.path().join("ct/joint.csv").exists());
    assert!(dir.path().join("ct/manifest.json").exists());
}

#[test]
fn suite_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--out", "s", "suite", "--selection-cases", "40", "--crossover-cases", "60"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("s/suite.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["reports"].as_array().unwrap().len(), 4);
}
