//! End-to-end checks of the `recon` binary.

use std::path::Path;
use std::process::{Command, Output};

fn recon(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_recon"));
    cmd.args(args).env_remove("RECON_SEED");
    if let Some(s) = seed_env {
        cmd.env("RECON_SEED", s);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 7] = ["mse-sweep", "--d", "2", "--n-list", "4,6", "--trials", "100"];

#[test]
fn sweep_csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for w in ["1", "3", "8"] {
        let p = dir.path().join(format!("{w}.csv"));
        let o = recon(&[&SMALL[..], &["--seed", "42", "--workers", w, "--out", path_str(&p)]].concat(), None);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(std::fs::read(&p).unwrap());
    }
    assert!(outs.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(outs.pop().unwrap()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert!(lines.next().unwrap().starts_with("d,N,trials,seed,W2_mean"));
    assert_eq!(lines.count(), 2);
    assert!(!text.contains('\r'));
}

#[test]
fn seed_changes_output_and_env_seed_is_default() {
    let a = recon(&[&SMALL[..], &["--seed", "1"]].concat(), None);
    let b = recon(&[&SMALL[..], &["--seed", "2"]].concat(), None);
    assert_ne!(a.stdout, b.stdout);
    let env = recon(&SMALL, Some("1"));
    assert!(env.status.success());
    assert_eq!(env.stdout, a.stdout);
    // an explicit flag beats the environment
    let both = recon(&[&SMALL[..], &["--seed", "2"]].concat(), Some("1"));
    assert_eq!(both.stdout, b.stdout);
    let bad = recon(&SMALL, Some("abc"));
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("seed"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"d": 2, "n-list": [4, 6], "trials": 100, "seed": 9, "estimators": ["rg"]}"#).unwrap();
    let o = recon(&["mse-sweep", "--config", path_str(&cfg), "--trials", "120"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"trials\":120"));
    assert!(text.contains("\"seed\":9"));
    // estimators not run leave empty cells
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[8], "");
    assert_ne!(row[10], "");

    std::fs::write(&cfg, r#"{"d": 2, "n_list": [4]}"#).unwrap();
    let o = recon(&["mse-sweep", "--config", path_str(&cfg)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_list"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2_naming_the_field() {
    for (args, field) in [
        (vec!["mse-sweep", "--trials", "0"], "trials"),
        (vec!["mse-sweep", "--n-list", "8,4"], "n-list"),
        (vec!["mse-sweep", "--delta", "0"], "delta"),
        (vec!["mse-sweep", "--law", "cap:9"], "law"),
        (vec!["mse-sweep", "--law", "file:/nonexistent/dirs.txt"], "law"),
        (vec!["coverage", "--theta", "2.0"], "theta"),
        (vec!["coverage", "--net-eps", "-1"], "net-eps"),
        (vec!["radial", "--lambda", "3"], "lambda"),
    ] {
        let o = recon(&[&args[..], &["--seed", "0"]].concat(), None);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn capacity_failure_on_every_row_exits_1() {
    let o = recon(&[&SMALL[..], &["--seed", "0", "--max-systems", "5"]].concat(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exceeds the cap"));
    // one row fits, the other is reported and skipped
    let o = recon(&[&SMALL[..], &["--seed", "0", "--max-systems", "40"]].concat(), None);
    assert!(o.status.success());
    assert!(stderr(&o).contains("skipped N = 6"));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}

#[test]
fn draw_instance_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("inst.txt");
    let o = recon(&["draw-instance", "--d", "2", "--n", "6", "--seed", "3", "--out", path_str(&p)], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = recon(&["solve", path_str(&p)], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let value = |key: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(&format!("{key} "))).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!(out.contains("certified true"));
    assert!(value("consistent_error") <= value("worst_case_error") + 1e-6);
    assert_eq!(recon(&["solve", "/nonexistent"], None).status.code(), Some(1));
}

#[test]
fn demo_1d_reports_pass() {
    let o = recon(&["demo-1d", "--n", "10", "--trials", "20000", "--seed", "7"], None);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(o.status.success(), "{out}");
    assert!(out.contains("8/132") && out.contains("14/132"));
    assert_eq!(out.matches("PASS").count(), 2);
}

#[test]
fn coverage_and_radial_write_csv() {
    let o = recon(
        &["coverage", "--d", "3", "--theta", "0.9,1.3", "--n-list", "1,8", "--trials", "50", "--net-eps", "0.3", "--seed", "1"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2 + 4);
    // N = 1 never covers
    assert!(text.lines().nth(2).unwrap().contains(",1,50,50,0,0,"));

    let o = recon(&["radial", "--d", "3", "--n", "10", "--trials", "2000", "--seed", "1", "--estimators", "consistent"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("certificate failures: 0"));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2 + 9);
}
