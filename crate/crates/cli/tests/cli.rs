use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bqms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqms"))
        .args(args)
        .env_remove("BQMS_WORKERS")
        .output()
        .expect("spawn bqms")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn certify_qou_example_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = bqms(&[
        "certify", "--model", "qou", "--lambda", "1.4142", "--mu", "1", "--k", "2", "-o",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("certificate.json"));
    assert_eq!(j["report"]["verdict"], "certified");
    assert_eq!(j["constants"]["source"], "closed-form");
    assert!(j["report"]["margin"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn simulate_l_photon_example_has_lyapunov_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = bqms(&[
        "simulate", "--model", "l_photon", "--l", "2", "--alpha", "2", "--cutoff", "80",
        "--t-final", "5", "-o", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "lyapunov_0").unwrap();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 51);
    // |alpha^2 - alpha^2|^2 at the vacuum: |0 - 4|^2
    assert!((rows[0][col] - 16.0).abs() < 1e-12);
    assert!(rows.last().unwrap()[col] < 1e-6);
    let summary = read_json(&dir.path().join("simulate.json"));
    assert_eq!(summary["degree"], 2);
}

#[test]
fn lemmas_example_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = bqms(&["lemmas", "--trials", "10000", "--seed", "7", "-o", &out_arg(dir.path())]);
    let j = read_json(&dir.path().join("lemmas.json"));
    assert_eq!(j["report"]["trials"], 10000);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn catalog_lists_models() {
    let o = bqms(&["catalog"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("z_theta"));
    let cnot = text
        .split("\ncnot")
        .nth(1)
        .expect("cnot entry");
    assert!(cnot.contains("two-mode"));
    assert!(!text.to_lowercase().contains("toffoli"));

    let o = bqms(&["catalog", "--json"]);
    let j: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j.as_array().unwrap().len(), 7);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = bqms(&[
            "certify", "--model", "l_photon", "--l", "3", "--alpha", "1", "--k", "2",
            "--constants", "tight", "--target", "mu", "--drift-c", "1.5", "--cutoff", "60",
            "-o", &out_arg(dir),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = bqms(&[
            "perturb", "--model", "qou", "--lambda", "1.4142", "--mu", "1", "--cutoff", "30",
            "--seed", "3", "-o", &out_arg(dir),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = bqms(&[
            "ec-norm", "--model", "pure_loss", "--cutoff", "8", "--seed", "5", "-o",
            &out_arg(dir),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["certificate.json", "perturbation.json", "perturbation.csv", "ec_norm.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_bqms"))
            .args([
                "perturb", "--model", "qou", "--lambda", "2", "--mu", "1", "--cutoff", "25",
                "-o", dir.to_str().unwrap(),
            ])
            .env("BQMS_WORKERS", workers)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(a.path(), "1")), 0);
    assert_eq!(code(&run(b.path(), "3")), 0);
    assert_eq!(
        std::fs::read(a.path().join("perturbation.json")).unwrap(),
        std::fs::read(b.path().join("perturbation.json")).unwrap()
    );
}

#[test]
fn config_file_with_flag_and_set_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"version": 1, "command": "certify",
            "model": {"model": "qou", "params": {"lambda": 3.0, "mu": 1.0}},
            "certify": {"k": 4}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bqms(&[
        "certify", "--config", cfg.to_str().unwrap(), "--lambda", "2", "--set",
        "certify.k=2", "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&out.join("certificate.json"));
    assert_eq!(j["config"]["model"]["params"]["lambda"], 2.0);
    assert_eq!(j["config"]["model"]["params"]["mu"], 1.0);
    assert_eq!(j["constants"]["k"], 2.0);
    // (k/4)(lambda^2 - mu^2)
    assert_eq!(j["constants"]["c"], 1.5);
}

#[test]
fn parse_and_validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&bqms(&["certify", "--config", bad.to_str().unwrap()])), 2);

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"version": 1, "colour": "red"}"#).unwrap();
    assert_eq!(code(&bqms(&["certify", "--config", unknown.to_str().unwrap()])), 2);

    let version = dir.path().join("version.json");
    std::fs::write(&version, r#"{"version": 2}"#).unwrap();
    assert_eq!(code(&bqms(&["certify", "--config", version.to_str().unwrap()])), 2);

    let wrong_command = dir.path().join("cmd.json");
    std::fs::write(&wrong_command, r#"{"version": 1, "command": "simulate"}"#).unwrap();
    assert_eq!(code(&bqms(&["certify", "--config", wrong_command.to_str().unwrap()])), 2);

    assert_eq!(code(&bqms(&["certify", "--model", "toffoli"])), 2);
    assert_eq!(code(&bqms(&["certify", "--model", "pure_loss", "--kappa", "-1"])), 2);
    assert_eq!(code(&bqms(&["certify", "--model", "qou", "--lambda", "1"])), 2);
    assert_eq!(code(&bqms(&["simulate", "--model", "qou", "--lambda", "1", "--mu", "0",
        "--method", "euler"])), 2);
    // CNOT has no closed-form mu.
    assert_eq!(code(&bqms(&["certify", "--model", "cnot", "--alpha", "1", "--epsilon", "0.1"])), 2);
    assert_eq!(code(&bqms(&["certify", "--model", "qou", "--lambda", "2", "--mu", "1",
        "--cutoff", "5"])), 2);
    assert_eq!(code(&bqms(&["frobnicate"])), 2);
}

#[test]
fn violated_inequality_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bqms(&[
        "certify", "--model", "qou", "--lambda", "1", "--mu", "1", "--cutoff", "40",
        "--constants", "explicit", "--omega", "-1", "-o", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
    let j = read_json(&dir.path().join("certificate.json"));
    assert_eq!(j["report"]["verdict"], "violated");
    assert!(j["report"]["witness"].is_array());
}

#[test]
fn leakage_breach_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = bqms(&[
        "simulate", "--model", "l_photon", "--l", "2", "--alpha", "2", "--cutoff", "12",
        "--t-final", "1", "--leakage-tol", "1e-9", "-o", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn time_dependent_certificate_reports_worst_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = bqms(&[
        "certify", "--model", "x_gate", "--alpha", "1", "--cutoff", "60", "-o",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("certificate.json"));
    assert!(j["report"]["time"].is_number());
}
