use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infonomics")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn json(args: &[&str]) -> Value {
    let mut a = vec!["--json"];
    a.extend_from_slice(args);
    serde_json::from_str(&ok(&a)).unwrap()
}

#[test]
fn prosecutor_value_and_signal() {
    let inst = fixture("prosecutor.json");
    let out = ok(&["persuade", "solve", "--instance", inst.to_str().unwrap()]);
    let value = out.lines().find(|l| l.starts_with("value")).unwrap();
    assert_eq!(value.split_whitespace().last(), Some("0.6"));
    assert!(out.contains("signal"));

    let rec = json(&["--exact", "persuade", "solve", "--instance", inst.to_str().unwrap()]);
    assert_eq!(rec["value"], "3/5");
    let m = &rec["signal"]["matrix"];
    assert_eq!(m[0], serde_json::json!(["1", "0"]));
    assert_eq!(m[1], serde_json::json!(["3/7", "4/7"]));
}

#[test]
fn prosecutor_envelope_breakpoints() {
    let inst = fixture("prosecutor.json");
    let rec = json(&["--exact", "persuade", "envelope", "--instance", inst.to_str().unwrap()]);
    assert_eq!(rec["hull"], serde_json::json!([["0", "0"], ["1/2", "1"], ["1", "1"]]));
    assert_eq!(rec["value_at_prior"], "3/5");
}

#[test]
fn knowledge_golden_set_exact() {
    let m = fixture("partition.json");
    let rec = json(&["--exact", "knowledge", "--model", m.to_str().unwrap(), "--op", "k", "--event", "3,4,5,6"]);
    assert_eq!(rec["agents"]["1"], serde_json::json!(["4", "5", "6"]));
    assert_eq!(rec["agents"]["2"], serde_json::json!(["3", "4", "5", "6"]));
    assert_eq!(rec["everyone"], serde_json::json!(["4", "5", "6"]));
    let meet = json(&["knowledge", "--model", m.to_str().unwrap(), "--op", "meet"]);
    assert_eq!(meet["blocks"], serde_json::json!([["1", "2", "3", "4", "5"], ["6"]]));
}

#[test]
fn garbling_certificate_prints_kernel() {
    let (q, p) = (fixture("signal_q.json"), fixture("signal_p.json"));
    let out = ok(&["blackwell", "compare", "--sigma", q.to_str().unwrap(), "--sigma2", p.to_str().unwrap()]);
    assert!(out.contains("FirstStrictlyMore"));
    for row in ["ll         1  0", "lh         1  0", "hl         0  1", "hh         0  1"] {
        assert!(out.contains(row), "{out}");
    }
}

#[test]
fn seeded_simulations_are_reproducible() {
    let env = fixture("env.json");
    let berk = fixture("berk.json");
    let cases: [Vec<&str>; 3] = [
        vec!["--seed", "7", "learn", "consistency", "--env", env.to_str().unwrap(), "--paths", "50"],
        vec!["--seed", "7", "learn", "merge", "--env", env.to_str().unwrap(), "--paths", "50", "--t", "40"],
        vec!["--seed", "7", "--json", "misspec", "berk", "--model", berk.to_str().unwrap(), "--paths", "50", "--t", "200"],
    ];
    for args in &cases {
        let (a, b) = (run(args), run(args));
        assert!(a.status.success(), "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let other = run(&["--seed", "8", "--json", "misspec", "berk", "--model", berk.to_str().unwrap(), "--paths", "50", "--t", "200"]);
    assert_ne!(run(&cases[2]).stdout, other.stdout);
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = run(&["--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = run(&["persuade", "solve"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_usage_error() {
    let o = run(&["persuade", "solve", "--instance", "/nonexistent/file.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_mass_block_rejected() {
    let m = fixture("zero_block.json");
    let o = run(&["knowledge", "--model", m.to_str().unwrap(), "--op", "meet"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("positive prior mass"), "{}", stderr(&o));
}

#[test]
fn near_stochastic_row_renormalized_with_warning() {
    let s = fixture("near_stochastic.json");
    let o = run(&["--json", "signals", "induce", "--signal", s.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let rec: Value = serde_json::from_slice(&o.stdout).unwrap();
    let w: f64 = rec["weights"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((w - 1.0).abs() < 1e-12);
}

#[test]
fn row_outside_tolerance_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"version":1,"states":["a","b"],"realizations":["x","y"],"matrix":[[0.5,0.4],[0.5,0.5]]}"#,
    )
    .unwrap();
    let o = run(&["signals", "induce", "--signal", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("signal"), "{}", stderr(&o));
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    std::fs::write(&path, r#"{"version":1,"states":["a"],"realizations":["x"],"matrix":[[1]],"colour":1}"#).unwrap();
    let o = run(&["signals", "induce", "--signal", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn constructed_signal_round_trips() {
    let beliefs = fixture("posteriors.json");
    let rec = json(&["--exact", "signals", "construct", "--posteriors", beliefs.to_str().unwrap(), "--prior", "1/2,1/2"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("signal.json");
    std::fs::write(&path, serde_json::to_string_pretty(&rec).unwrap()).unwrap();
    let back = json(&["--exact", "signals", "induce", "--signal", path.to_str().unwrap(), "--prior", "1/2,1/2"]);
    assert_eq!(back["distinct"]["weights"], serde_json::json!(["5/16", "3/8", "5/16"]));
    assert_eq!(
        back["distinct"]["support"],
        serde_json::json!([["9/10", "1/10"], ["1/2", "1/2"], ["1/10", "9/10"]])
    );
}

#[test]
fn researcher_berk_nash() {
    let m = fixture("researcher.json");
    let rec = json(&["misspec", "bn-check", "--model", m.to_str().unwrap(), "--choice", "H,L", "--base", "10"]);
    assert_eq!(rec["equilibrium"], true);
    assert_eq!(rec["minimizers"], serde_json::json!([0]));
    assert!((rec["divergence"][0].as_f64().unwrap() - 0.0038).abs() < 2e-4);
}

#[test]
fn exact_kls_chain() {
    let m = fixture("kls.json");
    let rec = json(&["--exact", "learn", "kls", "--model", m.to_str().unwrap()]);
    assert_eq!(rec["ab_chain_holds"], true);
    assert_eq!(rec["ba_chain_holds"], true);
}

#[test]
fn gaussian_goldens() {
    let rec = json(&["gaussian", "career"]);
    assert_eq!(rec["effort"], 0.5);
    let rec = json(&["gaussian", "coordination", "--var-theta", "1", "--var-eps", "2", "--beta", "0.4"]);
    assert!(rec["fixed_point_residual"].as_f64().unwrap() < 1e-12);
}
