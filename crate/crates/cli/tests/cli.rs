use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scenred::config::ExperimentConfig;
use scenred::ocp::solve_instance;
use tempfile::TempDir;

const SMALL: &str = r#"
seed = 7
horizon = 4
x0 = [0.0, 0.0]
min_satisfaction_prob = 0.5

[system]
a = [[1.0, 1.0], [0.0, 0.5]]
b = [[0.0], [1.0]]

[state_constraints]
lower = [-0.2, -0.2]

[input_constraints]
lower = [-2.0]
upper = [2.0]

[scenarios]
count = 20
distribution = { kind = "gaussian", std = [0.1] }

[sweep]
m_tilde = [3, 5]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scenred"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scen.csv");
    let o = run(&["generate", "--M", "200", "--n", "2", "--N", "10", "--seed", "42", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 201);
    assert_eq!(lines[1].split(',').count(), 21);
}

#[test]
fn generate_rejects_bad_arguments() {
    assert!(!run(&["generate", "--n", "2", "--N", "10"]).status.success());
    let o = run(&["generate", "--M", "0", "--n", "2", "--N", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reduce_shapes_and_identity() {
    let dir = TempDir::new().unwrap();
    let scen = dir.path().join("scen.json");
    assert!(run(&["generate", "--M", "200", "--n", "2", "--N", "10", "--out", s(&scen)]).status.success());

    let red = dir.path().join("red.json");
    let o = run(&["reduce", "--input", s(&scen), "--M-tilde", "25", "--l", "1", "--out", s(&red)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&red).unwrap()).unwrap();
    let centers = v["scenarios"].as_array().unwrap();
    assert_eq!(centers.len(), 25);
    let mass: f64 = centers.iter().map(|c| c["p"].as_f64().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);

    let o = run(&["reduce", "--input", s(&scen), "--M-tilde", "200", "--out", s(&red)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&red).unwrap()).unwrap();
    assert_eq!(v["loss"].as_f64(), Some(0.0));

    let o = run(&["reduce", "--input", s(&scen), "--M-tilde", "201"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_matches_library() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(&dir, "small.toml", SMALL);
    let sol_path = dir.path().join("sol.json");
    let lp_path = dir.path().join("model.lp");
    let o = run(&["solve", "--config", s(&cfg_path), "--variant", "exact", "--lp", s(&lp_path), "--out", s(&sol_path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&lp_path).unwrap().contains("Binaries"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sol_path).unwrap()).unwrap();

    let cfg = ExperimentConfig::from_path(&cfg_path).unwrap();
    let problem = cfg.problem().unwrap();
    let sol = solve_instance(&problem.exact_instance(), &cfg.solver.exact_options()).unwrap();
    assert_eq!(v["objective"].as_f64().unwrap(), sol.objective);
    let u: Vec<f64> = v["u_star"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(u, sol.u_star);

    let o = run(&["evaluate", "--config", s(&cfg_path), "--solution", s(&sol_path)]);
    assert!(o.status.success());
    let e: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(e["satisfaction_prob"].as_f64().unwrap() >= 0.5 - 1e-9);
}

#[test]
fn reduced_variants_solve() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(&dir, "small.toml", SMALL);
    for variant in ["p1", "P2"] {
        let o = run(&["solve", "--config", s(&cfg_path), "--variant", variant, "--M-tilde", "5", "--method", "kMNS"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["indicators"].as_array().unwrap().len(), 5);
    }
    let o = run(&["solve", "--config", s(&cfg_path), "--variant", "p2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn infeasible_solve_exits_two() {
    let dir = TempDir::new().unwrap();
    let body = SMALL
        .replace("min_satisfaction_prob = 0.5", "min_satisfaction_prob = 1.0")
        .replace("lower = [-0.2, -0.2]", "lower = [-0.001, -0.001]");
    let cfg_path = write_config(&dir, "tight.toml", &body);
    let o = run(&["solve", "--config", s(&cfg_path), "--variant", "exact"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "infeasible");
}

#[test]
fn unknown_variant_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(&dir, "small.toml", SMALL);
    let o = run(&["solve", "--config", s(&cfg_path), "--variant", "p4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let body = SMALL.replace("m_tilde = [3, 5]", "m_tilde = []\nexact = false");
    let cfg_path = write_config(&dir, "empty.toml", &body);
    let o = run(&["experiment", "--config", s(&cfg_path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        String::from_utf8(o.stdout).unwrap().trim_end(),
        "variant,method,M_tilde,seed,status,objective,correction,satisfaction_prob,expected_cost_oos,solver_time_s,nodes"
    );
}

#[test]
fn malformed_config_reports_location() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(&dir, "bad.toml", &SMALL.replace("horizon = 4", "horizon = 4\nhorizn = 5"));
    let o = run(&["experiment", "--config", s(&cfg_path)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("horizn") && err.contains("line"), "{err}");
}

#[test]
fn experiment_is_repeatable() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(&dir, "small.toml", SMALL);
    let rows = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&["experiment", "--config", s(&cfg_path), "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        // Drop the timing column before comparing.
        fs::read_to_string(&out)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(9);
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    let a = rows("a.csv");
    assert_eq!(a.len(), 1 + 1 + 2 * 2 * 2);
    assert_eq!(a, rows("b.csv"));

    let gen = |name: &str| {
        let out = dir.path().join(name);
        assert!(run(&["generate", "--config", s(&cfg_path), "--out", s(&out)]).status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(gen("g1.csv"), gen("g2.csv"));
}
