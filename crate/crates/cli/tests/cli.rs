use std::path::Path;
use std::process::{Command, Output};

fn katu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_katu")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn verify_passes_every_check() {
    let out = katu(&["verify"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("check_id,"));
    assert!(lines.count() > 20);
}

#[test]
fn coarse_verify_reports_failure() {
    let out = katu(&["verify", "--n", "8"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = katu(&["solve", "--n", "256", "--jobs", "2", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().next().unwrap(), "t,z,x_weighted,x,residual");
    assert_eq!(text.lines().count(), 258);
}

#[test]
fn blowup_exits_three_with_partial_solution() {
    let out = katu(&["solve", "--beta", "1", "--m", "1.5", "--xa", "1", "--horizon", "40", "--n", "400"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(String::from_utf8(out.stdout).unwrap().lines().count() > 2);
}

#[test]
fn invalid_fields_exit_one_with_field_name() {
    let out = katu(&["solve", "--alpha", "1.5"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("alpha"), "{}", stderr(&out));

    let out = katu(&["audit", "--T", "100,10"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`T`"));

    let out = katu(&["sweep", "--m_values", "2", "--m_factors", "2"]);
    assert_eq!(code(&out), 1);

    assert_eq!(code(&katu(&["frobnicate"])), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"alpha": 0.7, "beta": 1.0, "m": 2.0, "lambda": 0.5, "xa": 0.5, "n": 64, "format": "json"}"#);
    let out = katu(&["solve", "--config", &cfg, "--n", "32"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 33);

    let bad = write(dir.path(), "bad.json", r#"{"alpah": 0.7}"#);
    let out = katu(&["solve", "--config", &bad]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("alpah"));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"alpha_values": [0.5], "mu_values": [0.0, -0.6], "m_factors": [0.8, 1.5], "beta": 1.0, "xa": 1.0}"#,
    );
    let out = katu(&["sweep", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].contains(",blowup,"));
    assert!(rows[1].contains(",global_tracked,"));
    // mu below -alpha is reported per cell, not as a run failure
    assert!(rows[2].contains(",error,") && rows[3].contains(",error,"));
}

#[test]
fn audit_bound_decreases_with_horizon() {
    let out = katu(&["audit", "--mu", "0.5", "--m", "2", "--T", "10,100", "--n", "512", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let bound = |i: usize| rows[i]["vanishing_bound"].as_f64().unwrap();
    assert!(bound(1) < bound(0));
    assert_eq!(rows[0]["directions_ok"], true);
}
