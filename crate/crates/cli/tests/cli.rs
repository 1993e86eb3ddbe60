use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn tubqi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubqi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(name: &str) -> String {
    corpus(name).display().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(
        tubqi(&["decide", &path("w2.tub"), &path("w2.tub")]).status.code(),
        Some(0)
    );
    assert_eq!(
        tubqi(&["decide", &path("w2.tub"), &path("w3.tub")]).status.code(),
        Some(1)
    );
    let capped = tubqi(&["decide", &path("w2.tub"), &path("w3.tub"), "--max-candidates", "1"]);
    assert_eq!(capped.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&capped.stdout).contains("inconclusive"));
    assert_eq!(
        tubqi(&["decide", &path("w2.tub"), "/nonexistent.tub"]).status.code(),
        Some(2)
    );
    assert_eq!(tubqi(&["decide", &path("w2.tub")]).status.code(), Some(2));
}

#[test]
fn malformed_input_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tub");
    std::fs::write(&bad, "vertex v\nedge x : v (1,0) -> w (1,1)\n").unwrap();
    let out = tubqi(&["inspect", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.tub"));
}

#[test]
fn json_output_is_deterministic() {
    let args = [
        "decide",
        &path("one_torus_3_1.tub"),
        &path("two_torus_3_1.tub"),
        "--json",
    ];
    let a = tubqi(&args);
    let b = tubqi(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    for key in [
        "version",
        "inputs",
        "classes",
        "matches",
        "strategies",
        "system",
        "assignment",
        "stats",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let q = &v["assignment"]["values"][0]["value"]["half_log2_of"];
    assert!(q["num"].is_string() && q["den"].is_string());
}

#[test]
fn negative_verdict_json_has_reason() {
    let out = tubqi(&["decide", &path("w2.tub"), &path("u.tub"), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "not-quasi-isometric");
    assert!(v["reason"].as_str().unwrap().contains("boundedness"));
    assert_eq!(v["stats"]["extensions_enumerated"], 0);
}

#[test]
fn inspect_examples() {
    let wise: Value = serde_json::from_slice(&tubqi(&["inspect", &path("wise.tub"), "--json"]).stdout).unwrap();
    assert_eq!(wise["classes"].as_array().unwrap().len(), 1);
    assert_eq!(wise["classes"][0]["types"].as_array().unwrap().len(), 3);
    assert_eq!(wise["patterns"][0]["symmetry_order"], 6);

    let u: Value = serde_json::from_slice(&tubqi(&["inspect", &path("u.tub"), "--json"]).stdout).unwrap();
    let classes = u["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 2);
    assert!(classes.iter().all(|c| c["bounded"] == false));
    assert_eq!(u["max_slope"], "undefined");

    let w2 = tubqi(&["inspect", &path("w2.tub")]);
    assert!(String::from_utf8_lossy(&w2.stdout).contains("max slope: 2"));
}

#[test]
fn witness_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let (a, b) = (path("one_torus_3_1.tub"), path("two_torus_3_1.tub"));
    let out = tubqi(&["decide", &a, &b, "--json"]);
    std::fs::write(&cert, &out.stdout).unwrap();
    let ok = tubqi(&["witness", &a, &b, "--cert", cert.to_str().unwrap(), "--radius", "6"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));

    // swapping the inputs breaks the digests
    let swapped = tubqi(&["witness", &b, &a, "--cert", cert.to_str().unwrap()]);
    assert_eq!(swapped.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&swapped.stderr).contains("digest"));

    // a tightened upper bound is caught by re-verification
    let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let values = v["assignment"]["values"].as_array_mut().unwrap();
    let u = values.iter_mut().find(|x| x["var"] == "U1").unwrap();
    u["value"]["half_log2_of"] = serde_json::json!({"num": "1", "den": "1"});
    std::fs::write(&cert, serde_json::to_vec(&v).unwrap()).unwrap();
    let bad = tubqi(&["witness", &a, &b, "--cert", cert.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn prose_convention_runs() {
    let out = tubqi(&[
        "decide",
        &path("w2.tub"),
        &path("w2.tub"),
        "--convention",
        "prose",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["convention"], "prose");
}

#[test]
fn identity_certificate_ball_has_no_error() {
    use tubqi_cli::commands::{decide_loaded, load_file, DecideFlags};
    let w2 = load_file(&corpus("w2.tub")).unwrap();
    let d = decide_loaded(&w2, &w2, &DecideFlags::default()).unwrap();
    let v = tubqi_cli::certificate::verify(&w2.input(), &w2.input(), &d.certificate).unwrap();
    let r = tubqi_cli::witness_ball(&v.strategies, &v.system, &v.assignment, v.convention, 6);
    assert!(r.pass());
    assert!(r.max_abs_error.is_zero());
    assert_eq!(r.radius, 6);
}
