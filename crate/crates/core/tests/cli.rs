use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn iqseq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqseq"))
        .args(args)
        .current_dir(dir)
        .env_remove("IQSEQ_TOL")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(dir.join(name), &out.stdout).unwrap();
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn three_outcome_pipeline() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "a.json", &iqseq(&["examples", "three-outcome"], d));
    write(d, "nu.json", &iqseq(&["examples", "three-outcome", "--postproc"], d));
    write(d, "asi.json", &iqseq(&["decompose", "a.json", "--mode", "two-step", "--postproc", "nu.json"], d));
    let v = iqseq(&["verify", "asi.json", "--target", "a.json"], d);
    assert_eq!(v.status.code(), Some(0));
    assert!(json(&v)["max_distance"].as_f64().unwrap() < 1e-10);

    let r = json(&iqseq(&["resources", "asi.json"], d));
    assert_eq!(r["d_a"], 2);
    assert_eq!(r["r_t"], 3);

    let v = iqseq(&["validate", "asi.json"], d);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
}

#[test]
fn decomposition_reads_from_stdin() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "nu.json", &iqseq(&["examples", "three-outcome", "--postproc"], d));
    let example = iqseq(&["examples", "three-outcome"], d);
    let mut child = Command::new(env!("CARGO_BIN_EXE_iqseq"))
        .args(["decompose", "-", "--mode", "two-step", "--postproc", "nu.json"])
        .current_dir(d)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(&example.stdout).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(json(&out)["mode"], "two-step");
}

#[test]
fn every_mode_verifies() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "q.json", &iqseq(&["examples", "qubit4", "--alpha", "1.1", "--beta", "0.7", "--eta", "0.3"], d));
    write(d, "qnu.json", &iqseq(&["examples", "qubit4", "--postproc"], d));
    write(d, "s.json", &iqseq(&["examples", "shrinking"], d));
    write(d, "snu.json", &iqseq(&["examples", "shrinking", "--postproc"], d));
    let cases: [&[&str]; 6] = [
        &["decompose", "q.json", "--mode", "two-step", "--postproc", "qnu.json"],
        &["decompose", "q.json", "--mode", "product"],
        &["decompose", "q.json", "--mode", "n-step", "--chain", "qnu.json"],
        &["decompose", "q.json", "--mode", "povm", "--postproc", "qnu.json"],
        &["decompose", "s.json", "--mode", "two-step-reduced", "--postproc", "snu.json"],
        &["decompose", "s.json", "--mode", "two-step", "--postproc", "snu.json"],
    ];
    for args in cases {
        let out = iqseq(args, d);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["verification"]["passed"], true);
        std::fs::write(d.join("out.json"), &out.stdout).unwrap();
        let target = if args[1] == "q.json" { "q.json" } else { "s.json" };
        let check = iqseq(&["verify", "out.json", "--target", target], d);
        assert_eq!(check.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&check.stderr));
    }
    let shrink = json(&iqseq(&["decompose", "s.json", "--mode", "two-step-reduced", "--postproc", "snu.json"], d));
    assert_eq!(shrink["resources"]["d_a"], 2);
}

#[test]
fn min_ancilla_round_trip_uses_coarse_graining() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    // state preparation 1 -> 2: |0>/sqrt2 on "a", |1>/2 and |0>/2 on "b"
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let file = format!(
        r#"{{"format_version": 1, "dim_in": 1, "dim_out": 2, "outcomes": ["a", "b"],
            "operations": [[[[[{h}, 0]], [[0, 0]]]], [[[[0, 0]], [[0.5, 0]]], [[[0.5, 0]], [[0, 0]]]]]}}"#
    );
    std::fs::write(d.join("t.json"), file).unwrap();
    let out = iqseq(&["decompose", "t.json", "--mode", "min-ancilla"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["coarse_grain"].is_object());
    assert_eq!(v["resources"]["d_a"], 2);
    assert_eq!(v["resources"]["n_steps"], 3);
    std::fs::write(d.join("m.json"), &out.stdout).unwrap();
    assert_eq!(iqseq(&["verify", "m.json", "--target", "t.json"], d).status.code(), Some(0));
}

#[test]
fn min_ancilla_without_growth_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "a.json", &iqseq(&["examples", "qubit4-sic"], d));
    let out = iqseq(&["decompose", "a.json", "--mode", "min-ancilla"], d);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("g = ceil(dim_out/dim_in) > 1"));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("bad.json"), r#"{"format_version": 1, "dim_in": 1, "dim_out": 1, "outcomes": ["0"], "operations": [[[[true]]]]}"#).unwrap();
    let out = iqseq(&["validate", "bad.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/operations/0/0/0/0"));

    std::fs::write(d.join("half.json"), r#"{"format_version": 1, "dim_in": 1, "dim_out": 1, "outcomes": ["0"], "operations": [[[[[0.5, 0]]]]]}"#).unwrap();
    assert_eq!(iqseq(&["validate", "half.json"], d).status.code(), Some(3));
    assert_eq!(iqseq(&["decompose", "half.json", "--mode", "product"], d).status.code(), Some(3));

    write(d, "a.json", &iqseq(&["examples", "three-outcome"], d));
    write(d, "nu.json", &iqseq(&["examples", "three-outcome", "--postproc"], d));
    write(d, "asi.json", &iqseq(&["decompose", "a.json", "--mode", "two-step", "--postproc", "nu.json"], d));
    // a different target on the same outcomes fails verification
    std::fs::write(
        d.join("other.json"),
        r#"{"format_version": 1, "dim": 3, "outcomes": ["0", "1", "2"], "effects": [
            [[[1,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]]],
            [[[0,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]],[[0,0],[0,0],[0,0]]],
            [[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]],[[0,0],[0,0],[1,0]]]]}"#,
    )
    .unwrap();
    assert_eq!(iqseq(&["verify", "asi.json", "--target", "other.json"], d).status.code(), Some(4));
    assert_eq!(iqseq(&["decompose", "a.json", "--mode", "two-step"], d).status.code(), Some(1));
    assert_eq!(iqseq(&["validate", "missing.json"], d).status.code(), Some(1));
    assert_eq!(iqseq(&["examples", "qubit4", "--alpha", "0.3", "--beta", "0.5", "--eta", "0.1"], d).status.code(), Some(1));
}

#[test]
fn simulate_is_byte_identical_per_seed() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "a.json", &iqseq(&["examples", "qubit4-sic"], d));
    write(d, "asi.json", &iqseq(&["decompose", "a.json", "--mode", "product"], d));
    std::fs::write(d.join("rho.json"), r#"{"matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}"#).unwrap();
    let args = ["simulate", "asi.json", "--state", "rho.json", "--shots", "5000", "--seed", "17", "--record-intermediate"];
    let first = iqseq(&args, d);
    let second = iqseq(&args, d);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let v = json(&first);
    assert_eq!(v["shots"], 5000);
    assert!(v["intermediate"].is_array());
}

#[test]
fn tolerance_comes_from_environment() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    // normalization is off by 1e-6: invalid at the default tolerance, fine at 1e-4
    std::fs::write(d.join("t.json"), r#"{"format_version": 1, "dim_in": 1, "dim_out": 1, "outcomes": ["0"], "operations": [[[[[1.000001, 0]]]]]}"#).unwrap();
    assert_eq!(iqseq(&["validate", "t.json"], d).status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_iqseq"))
        .args(["validate", "t.json"])
        .current_dir(d)
        .env("IQSEQ_TOL", "1e-4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
