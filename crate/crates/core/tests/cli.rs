//! End-to-end runs of the command-line front end on files.

use std::fs;
use std::path::Path;

use curvestab::cli;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("curvestab").chain(args.iter().copied()).map(String::from);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn export(name: &str, dir: &Path) -> String {
    let (code, text, err) = call(&["export-gms", name]);
    assert_eq!(code, 0, "{err}");
    let path = dir.join(format!("{name}.gms"));
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exported_metric_checks_as_einstein() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("schwarzschild", dir.path());
    let (code, out, err) = call(&["check-einstein", &path]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["entry"], "schwarzschild");
}

#[test]
fn perturbed_metric_fails_the_einstein_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("schwarzschild", dir.path());
    let text = fs::read_to_string(&path).unwrap().replace("(r ^ 2)", "(r ^ 2.1)");
    fs::write(&path, text).unwrap();
    let (code, out, _) = call(&["check-einstein", &path]);
    assert_eq!(code, 3);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn malformed_file_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.gms");
    fs::write(&path, "metric \"bad\" {\n  coords { r in (0, inf)\n}\n").unwrap();
    let (code, _, err) = call(&["check-einstein", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("syntax error at"), "{err}");
}

#[test]
fn file_parameters_can_be_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("taub_bolt", dir.path());
    let (code, out, err) = call(&["export-gms", &path, "--n", "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("n = 2"), "{out}");
    assert_eq!(call(&["check-einstein", &path, "--nope", "1"]).0, 2);
}

#[test]
fn user_supplied_metric_has_no_destabilizer() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("schwarzschild", dir.path());
    let (code, _, err) = call(&["destabilize", &path]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn destabilize_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("h.json");
    let (code, _, err) = call(&["destabilize", "schwarzschild", "--samples", "3", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 3);
    assert!(v["golden_fit"]["max_deviation"].as_f64().unwrap() < 1e-8);
}

#[test]
fn second_variation_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("q.json");
    let (code, stdout, err) = call(&[
        "second-variation",
        "schwarzschild",
        "--sweep",
        "10,20",
        "--nodes",
        "128",
        "--nodes-theta",
        "12",
        "--strict",
        "--no-timing",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let json = fs::read_to_string(&out_path).unwrap();
    assert_eq!(json.trim(), stdout.trim());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["verdict"], "unstable");
    let csv = fs::read_to_string(out_path.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains("Q_eq19"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn strict_mode_rejects_a_stable_verdict() {
    let (code, _, _) = call(&["second-variation", "round_s4", "--strict", "--nodes", "64", "--nodes-theta", "8"]);
    assert_eq!(code, 4);
}

#[test]
fn compact_entries_need_no_cutoff() {
    let (code, out, err) = call(&["second-variation", "page", "--nodes", "64", "--nodes-theta", "8"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "unstable");
}

#[test]
fn identities_report_per_entry() {
    let (code, out, err) = call(&["identities", "eguchi_hanson"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["rows"].as_array().unwrap().iter().any(|r| r["status"] == "skipped"));
}
