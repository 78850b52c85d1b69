use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cmvuh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmvuh")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "seed = 3
[sequence]
kind = \"periodic\"
coefficients = [[0.5, 0.0], [-0.3, 0.2]]
[scan]
grid_size = 32
[truncation]
sizes = [8, 16]
boundary_phase_turns = [0.0, 0.5]
[verify]
samples = 200
matrix_samples = 50
";

fn write(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn uh_test(dir: &Path, cfg: &str, theta: &str) -> serde_json::Value {
    let o = cmvuh(dir, &["--config", cfg, "--out", "o", "uh-test", "--theta", theta]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn verify_passes_on_default_sequence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "v.toml", "[sequence]\nkind = \"periodic\"\ncoefficients = [[0.5, 0.0]]\n[verify]\nsamples = 500\nmatrix_samples = 100\n");
    let o = cmvuh(dir.path(), &["--config", &cfg, "--out", "o", "verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("o/verify.csv")).unwrap();
    assert!(report.starts_with("property,max_deviation,tolerance,samples,passed\n"));
    assert!(report.lines().skip(1).all(|l| l.ends_with(",true")), "{report}");
}

#[test]
fn shifted_parity_is_a_property_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", &SMALL.replace("sizes = [8, 16]", "parity = \"shifted\"\nsizes = [8, 16]"));
    let o = cmvuh(dir.path(), &["--config", &cfg, "--out", "o", "verify"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("factorization"), "{}", stderr(&o));
}

#[test]
fn malformed_descriptor_reports_position() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "seq.toml", "kind = \"periodic\"\ncoefficients = [[0.1, 0.0]\n");
    let cfg = write(dir.path(), "c.toml", "descriptor = \"seq.toml\"\n");
    let o = cmvuh(dir.path(), &["--config", &cfg, "verify"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seq.toml:2:"), "{}", stderr(&o));

    write(dir.path(), "seq.toml", "kind = \"periodic\"\ncoefficients = [[1.5, 0.0]]\n");
    assert_eq!(code(&cmvuh(dir.path(), &["--config", &cfg, "verify"])), 2);
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "g.toml", "[scan]\ngrid_size = 0\n");
    assert_eq!(code(&cmvuh(dir.path(), &["--config", &cfg, "scan"])), 2);
    let cfg = write(dir.path(), "u.toml", "[scan]\ngrid = 64\n");
    let o = cmvuh(dir.path(), &["--config", &cfg, "scan"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("u.toml:2:1"), "{}", stderr(&o));
    assert_eq!(code(&cmvuh(dir.path(), &["--threads", "0", "verify"])), 2);
    assert_eq!(code(&cmvuh(dir.path(), &["--config", "missing.toml", "verify"])), 2);
    assert_eq!(code(&cmvuh(dir.path(), &["uh-test"])), 2);
    assert_eq!(code(&cmvuh(dir.path(), &["uh-test", "--theta", "abc"])), 2);
    assert_eq!(code(&cmvuh(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&cmvuh(dir.path(), &["compare", "--out", "nothing-here"])), 2);
}

#[test]
fn uh_test_examples() {
    let dir = TempDir::new().unwrap();
    let half = write(dir.path(), "half.toml", "[sequence]\nkind = \"periodic\"\ncoefficients = [[0.5, 0.0]]\n");
    let free = write(dir.path(), "free.toml", "[sequence]\nkind = \"periodic\"\ncoefficients = [[0.0, 0.0]]\n");
    let v = uh_test(dir.path(), &half, "0");
    assert_eq!(v["class"], "UH");
    assert_eq!(v["oracle_uh"], true);
    assert!((v["splitting_rate"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-9);
    let v = uh_test(dir.path(), &half, &std::f64::consts::PI.to_string());
    assert_eq!(v["class"], "NotUH");
    assert!(v["sup_norm"].as_f64().unwrap().is_finite());
    let v = uh_test(dir.path(), &half, "-1.0");
    assert_eq!(v["class"], "UH");
    for theta in ["0", "1", "3"] {
        assert_eq!(uh_test(dir.path(), &free, theta)["class"], "NotUH");
    }
    let line = fs::read_to_string(dir.path().join("o/uh_test.jsonl")).unwrap();
    assert!(line.contains("\"theta\":3.0000000000000000e0"), "{line}");
}

#[test]
fn scan_is_deterministic_and_compare_reproduces_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let a = cmvuh(dir.path(), &["--config", &cfg, "--out", "a", "scan"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = cmvuh(dir.path(), &["--config", &cfg, "--out", "b", "--threads", "1", "scan"]);
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    for name in ["scan.csv", "scan.jsonl", "edges.csv", "spectra.jsonl", "spectra.csv", "summary.json"] {
        let x = fs::read(dir.path().join("a").join(name)).unwrap();
        let y = fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, y, "{name} differs between runs");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["grid_size"], 32);
    assert_eq!(summary["oracle"]["disagreements"], 0);
    assert_eq!(summary["deep_uh_failures"], 0);
    assert_eq!(summary["truncations"].as_array().unwrap().len(), 2);
    let scan_csv = fs::read_to_string(dir.path().join("a/scan.csv")).unwrap();
    assert_eq!(scan_csv.lines().count(), 33);

    let c = cmvuh(dir.path(), &["--config", &cfg, "--out", "a", "compare"]);
    assert_eq!(code(&c), 0, "{}", stderr(&c));
    assert_eq!(fs::read(dir.path().join("a/compare.json")).unwrap(), fs::read(dir.path().join("a/summary.json")).unwrap());
}
