use std::collections::BTreeMap;
use std::process::Command;

use kl_twist::report::{Environment, Kind, Record, Report};
use kl_twist::{run, RunConfig, Suite};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kl-twist"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("kl-twist-{}-{name}", std::process::id()))
}

#[test]
fn resonant_hbar_exits_with_code_2() {
    let out = bin().args(["twist", "--hbar", "0.5,0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resonance"));
}

#[test]
fn bad_configs_exit_with_code_2() {
    let path = tmp("bad.json");
    std::fs::write(&path, r#"{"algebra": "A1", "tolerances": {"associator": -1.0}}"#).unwrap();
    let out = bin().args(["associator", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&path, r#"{"algebra": "G2"}"#).unwrap();
    let out = bin().args(["associator", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&path, r#"{"unknown_field": 1}"#).unwrap();
    let out = bin().args(["associator", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["axioms", "--hbar", "zero"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truncation_cap_is_enforced() {
    let cfg = RunConfig { n_max: Some(1), ..RunConfig::default() };
    let err = run(Suite::Twist, &cfg).unwrap_err();
    assert_eq!(err.code, 2);
    assert!(err.message.contains("n_max"));
}

#[test]
fn axioms_pass_and_write_reports() {
    let (json, csv) = (tmp("axioms.json"), tmp("axioms.csv"));
    let out = bin().args(["axioms", "--algebra", "A1", "--hbar", "0,0.35", "--out"]).arg(&json).arg("--csv").arg(&csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
    assert_eq!(v["environment"]["config"]["hbar"], serde_json::json!([0.0, 0.35]));
    let names: Vec<&str> = v["records"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("name,kind,residual"));
}

#[test]
fn reports_are_deterministic() {
    let cfg = RunConfig { rng_seed: Some(7), ..RunConfig::default() };
    let strip = |r: Report| r.records.into_iter().map(|x| Record { wall_time: 0.0, ..x }).collect::<Vec<_>>();
    let a = strip(run(Suite::Associator, &cfg).unwrap());
    let b = strip(run(Suite::Associator, &cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn tolerance_overrides_apply() {
    let mut tolerances = BTreeMap::new();
    tolerances.insert("associator/oracle_match".to_string(), 1e-30);
    let cfg = RunConfig { hbar: Some([0.0, 0.0]), tolerances, ..RunConfig::default() };
    let r = run(Suite::Associator, &cfg).unwrap();
    assert!(!r.pass);
    assert!(!r.get("associator/oracle_match").unwrap().pass);
    assert!(r.records.iter().filter(|x| x.name != "associator/oracle_match").all(|x| x.pass));
}

#[test]
fn classical_twist_suite_passes() {
    let r = run(Suite::Twist, &RunConfig { hbar: Some([0.0, 0.0]), ..RunConfig::default() }).unwrap();
    assert!(r.pass, "{}", r.summary());
    assert!(r.get("twist/classical_identity").unwrap().residual < 1e-10);
}

fn record(name: String, pass: bool) -> Record {
    Record { name, anchor: String::new(), kind: Kind::Residual, residual: 0.0, tolerance: 1.0, pass, wall_time: 0.0, note: None }
}

proptest! {
    #[test]
    fn overall_pass_iff_every_record_passes(flags in proptest::collection::vec(any::<bool>(), 0..12)) {
        let cfg = RunConfig::default().resolve().unwrap();
        let env = Environment { version: String::new(), subcommand: "all".into(), threads: 1, config: cfg };
        let records: Vec<Record> = flags.iter().enumerate().map(|(k, &p)| record(format!("c{k:02}"), p)).collect();
        let r = Report::new(env, records);
        prop_assert_eq!(r.pass, flags.iter().all(|&p| p));
    }
}
