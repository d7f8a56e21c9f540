use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PINNED: &str = "q = 2.0, 0.1, -2.1\np = 0.1, -0.05, -0.05\nsigma_1_2 = 0.5, 0.2\nsigma_2_3 = -0.3, 0.4\nsigma_1_3 = 0.1, -0.25\n";

fn spinrs(dir: &Path, config: &str, args: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_spinrs"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .output()
        .unwrap();
    (output, out)
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn free_simulation_is_linear_in_q_and_constant_in_p() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), "q = 1, 0, -1\np = 0.3, -0.1, -0.2\nt_end = 1\n", &["simulate"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let (header, rows) = table(&out.join("trajectory.csv"));
    assert_eq!(&header[..7], ["t", "q_1", "q_2", "q_3", "p_1", "p_2", "p_3"]);
    assert!(header.contains(&"re_sigma_1_2".to_string()) && header.contains(&"tr_L2".to_string()));
    assert!(rows[1][1].contains('e') && rows[1][1].split('e').next().unwrap().len() >= 18);
    let t = column(&header, &rows, "t");
    for a in 1..=3 {
        let p = column(&header, &rows, &format!("p_{a}"));
        assert!(p.iter().all(|x| (x - p[0]).abs() < 1e-12));
        let q = column(&header, &rows, &format!("q_{a}"));
        let v = (q[q.len() - 1] - q[0]) / t[t.len() - 1];
        assert!(q.iter().zip(&t).all(|(x, s)| (x - q[0] - v * s).abs() < 1e-10));
    }
    let s = summary(&out);
    assert_eq!(s["rk4"]["termination"]["reason"], "completed");
    assert!(s["initial_ledger"]["h_red"].as_f64().unwrap() > 3.0);
}

#[test]
fn comparison_of_seeded_run_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), "command = compare\nn = 3\nseed = 7\n", &[]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let s = summary(&out);
    assert!(s["comparison"]["max_discrepancy"].as_f64().unwrap() < 1e-6);
    assert!(out.join("projection.csv").exists() && out.join("comparison.csv").exists());
}

#[test]
fn scaling_table_errors_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), "n = 3\nseed = 11\n", &["scaling-limit"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let (header, rows) = table(&out.join("scaling.csv"));
    for quantity in ["hamiltonian", "lax_trace_2", "lax_trace_3"] {
        let sub: Vec<Vec<String>> = rows.iter().filter(|r| r[0] == quantity).cloned().collect();
        assert_eq!(sub.len(), 4);
        let err = column(&header, &sub, "error");
        assert!(err.windows(2).all(|w| w[1] < w[0]), "{quantity}: {err:?}");
    }
    let slope = summary(&out)["loglog_slopes"]["hamiltonian"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&slope));
}

#[test]
fn runs_are_byte_identical() {
    let config = "n = 4\nseed = 5\nmethod = both\nt_end = 0.5\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (oa, out_a) = spinrs(a.path(), config, &["simulate"]);
    let (ob, out_b) = spinrs(b.path(), &format!("{config}execution = sequential\n"), &["simulate"]);
    assert!(oa.status.success() && ob.status.success());
    for name in ["trajectory.csv", "projection.csv", "comparison.csv"] {
        assert_eq!(fs::read(out_a.join(name)).unwrap(), fs::read(out_b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), "q = 0.1, 2.0, -2.1\np = 1, 1, 1\ndt = 0\n", &["simulate"]);
    assert_eq!(output.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "ConfigError");
    assert!(err["error"]["violations"].as_array().unwrap().len() >= 3);
    assert!(out.join("error.json").exists());

    let (output, _) = spinrs(dir.path(), "n = 3\n", &[]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn drift_over_bound_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), &format!("{PINNED}dt = 0.05\nt_end = 10\ndrift_bound = 1e-12\n"), &["simulate"]);
    assert_eq!(output.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "ToleranceExceeded");
    let s = summary(&out);
    assert!(s["initial_ledger"].is_object());
    assert!(s["rk4"]["drift"].is_object());
    assert_eq!(s["rk4"]["termination"]["reason"], "drift_exceeded");
}

#[test]
fn wall_crossing_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), "q = 1, 0, -1\np = 0.3, -0.1, -0.2\nt_end = 3\n", &["simulate"]);
    assert_eq!(output.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "NonRegularTorus");
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn projection_and_invariants_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), PINNED, &["project"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(summary(&out)["projection"]["termination"]["reason"], "completed");

    let (output, out) = spinrs(dir.path(), PINNED, &["invariants"]);
    assert!(output.status.success());
    let (_, rows) = table(&out.join("invariants.csv"));
    assert!(rows.iter().any(|r| r[0] == "re_tr_AB"));
    assert!(rows.iter().any(|r| r[0] == "abs2_sigma_1_2"));
}

#[test]
fn poisson_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = spinrs(dir.path(), "n = 3\nseed = 5\npoisson_samples = 10\n", &["poisson-check"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let (_, rows) = table(&out.join("poisson.csv"));
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[3] == "true"), "{rows:?}");
}
