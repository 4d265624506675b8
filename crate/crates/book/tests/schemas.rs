use std::collections::BTreeSet;

use ppt_cli::{run_experiment, ExperimentSpec, Kind, Scenario};
use serde_json::Value;

fn load(name: &str) -> Value {
    let path = format!("{}/../../book/src/schemas/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn strings(v: &Value) -> BTreeSet<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect()
}

/// The report schema with the spec schema inlined in place of its `$ref`.
fn report_schema() -> Value {
    let mut spec = load("experiment_spec.schema.json");
    spec.as_object_mut().unwrap().remove("$schema");
    let mut report = load("report.schema.json");
    report["properties"]["spec_echo"] = spec;
    report
}

fn full_spec() -> ExperimentSpec {
    ExperimentSpec::from_json(
        r#"{"kind": "tail", "parameters": {"masses": [1]}, "seed": {"seed": 1, "stream_id": 2}, "n_samples": 5, "output_path": "r.json"}"#,
    )
    .unwrap()
}

#[test]
fn spec_schema_matches_spec_type() {
    let schema = load("experiment_spec.schema.json");
    let serialized = serde_json::to_value(full_spec()).unwrap();
    assert_eq!(keys(&schema["properties"]), keys(&serialized));
    assert_eq!(
        keys(&schema["properties"]["seed"]["properties"]),
        keys(&serialized["seed"])
    );

    let kinds: BTreeSet<String> = [
        Kind::Distance,
        Kind::Sample,
        Kind::Bound,
        Kind::Estimate,
        Kind::Tail,
        Kind::Isoperimetry,
        Kind::Verify,
    ]
    .iter()
    .map(|k| k.to_string())
    .collect();
    assert_eq!(strings(&schema["properties"]["kind"]["enum"]), kinds);
    let scenarios: BTreeSet<String> = Scenario::ALL.iter().map(|s| s.name()).collect();
    assert_eq!(strings(&schema["$defs"]["scenario"]["enum"]), scenarios);
}

#[test]
fn report_schema_matches_report_type() {
    let schema = load("report.schema.json");
    let report = serde_json::to_value(run_experiment(&full_spec()).unwrap()).unwrap();
    assert_eq!(keys(&schema["properties"]), keys(&report));
}

#[test]
fn runner_output_validates() {
    let spec_validator = jsonschema::validator_for(&load("experiment_spec.schema.json")).unwrap();
    let report_validator = jsonschema::validator_for(&report_schema()).unwrap();
    let specs = [
        r#"{"kind": "bound", "parameters": {"family": "poisson", "p": "const:2"}}"#,
        r#"{"kind": "bound", "parameters": {"family": "cox", "mixer": {"family": "gamma", "shape": 2, "scale": 0.5}}, "n_samples": 100}"#,
        r#"{"kind": "distance", "parameters": {"metric": "rho2", "omega": [[0.0]], "eta": []}}"#,
        r#"{"kind": "sample", "parameters": {"process": "poisson"}, "n_samples": 50}"#,
        r#"{"kind": "estimate", "parameters": {"target": "gibbs", "potential": "const:0.05", "n_side": 20}, "n_samples": 20}"#,
        r#"{"kind": "isoperimetry", "parameters": {"events": [{"relation": "at_most", "k": 1}]}, "n_samples": 200}"#,
        r#"{"kind": "verify", "parameters": {"scenario": "stirling"}}"#,
    ];
    for text in specs {
        let spec = ExperimentSpec::from_json(text).unwrap();
        let report = serde_json::to_value(run_experiment(&spec).unwrap()).unwrap();
        let errors: Vec<String> = report_validator.iter_errors(&report).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{text}: {errors:?}");
        assert!(spec_validator.is_valid(&serde_json::from_str(text).unwrap()));
    }
    let unknown: Value = serde_json::from_str(r#"{"kind": "tail", "foo": 1}"#).unwrap();
    assert!(!spec_validator.is_valid(&unknown));
    let mut report = serde_json::to_value(run_experiment(&full_spec()).unwrap()).unwrap();
    report["results"][0]["type"] = Value::from("bogus");
    assert!(!report_validator.is_valid(&report));
}
