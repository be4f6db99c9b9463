use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vgas(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vgas"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn error_line(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

fn rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn analytic_k41() {
    let dir = tempfile::tempdir().unwrap();
    let o = vgas(&["analytic"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("analytic.csv")).unwrap();
    let zetas: Vec<f64> = rows(&text)[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(zetas.len(), 3);
    for (z, want) in zetas.iter().zip([2.0 / 3.0, 4.0 / 3.0, 2.0]) {
        assert!((z - want).abs() < 1e-12, "{z} vs {want}");
    }
}

#[test]
fn kernel_check_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = vgas(&["kernel-check"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("kernel_check.csv").exists());
}

#[test]
fn zero_budget_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = vgas(&["structure", "--set", "mc.budget=0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = error_line(&o);
    assert_eq!(e["exit_code"], 2);
    assert!(!dir.path().join("structure.csv").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"mc": {"seeed": 3}}"#).unwrap();
    let o = vgas(&["analytic", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["exit_code"], 2);
}

#[test]
fn divergent_moment_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // h = 0.1, a = 0, b = 5 gives hp + 2 + a - b < 0 at p = 2
    let o = vgas(
        &[
            "structure",
            "--set",
            "gamma.preset=null",
            "--set",
            r#"gamma.atoms=[{"h":0.1,"weight":1,"a":0,"b":5}]"#,
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn cap_exceeded_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = vgas(&["structure", "--set", "window.max_expected_count=1"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
