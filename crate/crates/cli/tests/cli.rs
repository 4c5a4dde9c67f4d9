use std::path::Path;
use std::process::{Command, Output};

fn flatflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatflow"))
        .args(args)
        .env_remove("FLATFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const TORUS: &str = r#"{"faces":[[[0,0],[1,0],[1,1],[0,1]]],"pairings":[[[0,0],[0,2]],[[0,1],[0,3]]]}"#;
const BROKEN: &str = r#"{"faces":[[[0,0],[1,0],[1,1.5],[0,1]]],"pairings":[[[0,0],[0,2]],[[0,1],[0,3]]]}"#;

/// Primitive lattice vectors of length at most `t`.
fn lattice_count(t: f64) -> usize {
    let r = t as i64;
    let gcd = |mut a: i64, mut b: i64| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.abs()
    };
    (-r..=r)
        .flat_map(|a| (-r..=r).map(move |b| (a, b)))
        .filter(|&(a, b)| (a, b) != (0, 0) && ((a * a + b * b) as f64) <= t * t && gcd(a, b) == 1)
        .count()
}

#[test]
fn saddle_csv_matches_the_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let torus = write(dir.path(), "torus.json", TORUS);
    let out = flatflow(&["saddle", "--surface", &torus, "--T", "7.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("dx,dy,length,phi,start_sing,end_sing"));
    assert_eq!(csv.lines().count() - 1, lattice_count(7.5));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("# flatflow "));
    assert!(stderr.contains("surface_sha256="));
}

#[test]
fn broken_surface_exits_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.json", BROKEN);
    let out = flatflow(&["surface", "validate", &broken]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("differ in length"));
}

#[test]
fn exhausted_budget_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let torus = write(dir.path(), "torus.json", TORUS);
    let out = flatflow(&["saddle", "--surface", &torus, "--T", "40", "--budget", "5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn spread_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let torus = write(dir.path(), "torus.json", TORUS);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = flatflow(&[
            "spread", "--surface", &torus, "--N", "4", "--eps", "0.2", "--T", "150", "--dirs", "16", "--seed", "9",
            "--threads", "2", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["config"]["directions"], 16);
    assert!(v["pass_fraction"].as_f64().unwrap() >= 0.0);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let torus = write(dir.path(), "torus.json", TORUS);
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(r#"{{"command": "saddle", "args": {{"surface": "{torus}", "T": 2.5}}}}"#),
    );
    let from_file = flatflow(&["--config", &cfg]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(String::from_utf8(from_file.stdout).unwrap().lines().count() - 1, lattice_count(2.5));
    let overridden = flatflow(&["--config", &cfg, "saddle", "--T", "5"]);
    assert!(overridden.status.success(), "{}", String::from_utf8_lossy(&overridden.stderr));
    assert_eq!(String::from_utf8(overridden.stdout).unwrap().lines().count() - 1, lattice_count(5.0));
}

#[test]
fn unfold_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iso.json");
    let o = flatflow(&["surface", "unfold", "--vertices", "0,0;1,0;0,1", "--normalize", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = flatflow(&["surface", "validate", out.to_str().unwrap()]);
    assert!(v.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(summary["genus"], 1);
    assert_eq!(summary["faces"], 8);
}

#[test]
fn balance_and_discrepancy_reports() {
    let dir = tempfile::tempdir().unwrap();
    let pts: String = (0..64).map(|i| format!("{}\n", (i as f64 + 0.5) / 64.0)).collect();
    let file = write(dir.path(), "pts.txt", &pts);
    let b = flatflow(&["balance", "--points", &file, "--z", "2", "--p", "4", "--A", "2", "--M1", "16"]);
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let report: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(report["s"][0], 0.0);
    assert_eq!(report["anti_crowded"]["anti_crowded"], true);
    let d = flatflow(&["discrepancy", "--points", &file]);
    let v: serde_json::Value = serde_json::from_slice(&d.stdout).unwrap();
    assert!((v["star_discrepancy"].as_f64().unwrap() - 1.0 / 128.0).abs() < 1e-15);
}

#[test]
fn iet_hits_and_branches() {
    let dir = tempfile::tempdir().unwrap();
    let torus = write(dir.path(), "torus.json", TORUS);
    let hits = flatflow(&["iet", "--surface", &torus, "--theta", "0.7", "--hits", "50", "--x", "0.3", "--y", "0.2"]);
    assert!(hits.status.success(), "{}", String::from_utf8_lossy(&hits.stderr));
    assert_eq!(String::from_utf8(hits.stdout).unwrap().lines().count(), 50);
    let branches = flatflow(&["iet", "--surface", &torus, "--theta", "0.7"]);
    let rows: Vec<[f64; 3]> = serde_json::from_slice(&branches.stdout).unwrap();
    assert!((rows.iter().map(|r| r[1]).sum::<f64>() - 1.0).abs() < 1e-12);
    let bad = flatflow(&["iet", "--surface", &torus, "--theta", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}
