use std::path::Path;
use std::process::{Command, Output};

use ppt_cli::Report;
use tempfile::TempDir;

fn ppt(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ppt"));
    cmd.args(args).env_remove("PPT_THREADS");
    if let Some(t) = threads {
        cmd.env("PPT_THREADS", t);
    }
    cmd.output().expect("ppt runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const POISSON_BOUND: &str =
    r#"{"kind": "bound", "parameters": {"family": "poisson", "p": "const:2", "window": [0, 1]}}"#;

#[test]
fn minimal_bound_spec_prints_one() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", POISSON_BOUND);
    let out = ppt(&["bound", "--spec", &spec], None);
    assert!(out.status.success());
    let r = report(&out);
    let Some(ppt_cli::ResultValue::Bound(b)) = r.get("bound") else {
        panic!("{r:?}")
    };
    assert!((b.value.to_f64() - 1.0).abs() < 1e-12);
    assert_eq!(r.wall_time_ms, None);
    assert_eq!(r.library_version, ppt_cli::LIBRARY_VERSION);
}

#[test]
fn reports_do_not_depend_on_threads() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"kind": "sample", "parameters": {"process": "cox", "mixer": {"family": "gamma", "shape": 2, "scale": 0.5}, "window": [0, 3]}, "seed": {"seed": 11, "stream_id": 2}, "n_samples": 2000}"#,
    );
    let one = ppt(&["sample", "--spec", &spec, "--threads", "1"], None);
    let four = ppt(&["sample", "--spec", &spec], Some("4"));
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    let other = ppt(&["sample", "--spec", &spec, "--seed", "12"], None);
    assert_ne!(one.stdout, other.stdout);
}

#[test]
fn timing_is_opt_in() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", POISSON_BOUND);
    let r = report(&ppt(&["bound", "--spec", &spec, "--timing"], None));
    assert!(r.wall_time_ms.is_some());
}

#[test]
fn unknown_keys_exit_two_and_are_named() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"kind": "bound", "parameters": {"family": "poisson", "p": "const:2", "foo": 1}}"#,
    );
    let out = ppt(&["bound", "--spec", &spec], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("foo") && err.contains("parameters"), "{err}");
}

#[test]
fn expression_errors_carry_positions() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"kind": "bound", "parameters": {"family": "poisson", "p": "exp:1,x"}}"#,
    );
    let out = ppt(&["bound", "--spec", &spec], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parameters.p") && err.contains("position 6"), "{err}");
}

#[test]
fn kind_must_match_spec() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", POISSON_BOUND);
    let out = ppt(&["tail", "--spec", &spec], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(ppt(&["bound", "--spec", "/nonexistent/spec.json"], None).status.code() == Some(2));
}

#[test]
fn verify_exits_zero_when_checks_pass() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"kind": "verify", "parameters": {"scenario": "stirling"}}"#,
    );
    let out = ppt(&["verify", "--spec", &spec], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out).passed());
}

#[test]
fn tail_grid_to_csv_and_out_file() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("grid.csv");
    let text = format!(
        r#"{{"kind": "tail", "parameters": {{"masses": [1], "rs": [1, 2], "csv": {:?}}}}}"#,
        csv_path.display().to_string()
    );
    let spec = write(dir.path(), "spec.json", &text);
    let out_path = dir.path().join("report.json");
    let out = ppt(
        &["tail", "--spec", &spec, "--out", &out_path.display().to_string()],
        None,
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Report = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(r.get("grid").is_some());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mass,r,exact,bound_lipschitz,bound_sharp"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn output_path_in_spec_is_used() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("r.json");
    let text = format!(
        r#"{{"kind": "distance", "parameters": {{"metric": "rho2", "omega": [[0.0]], "eta": [[0.5], [1.0]]}}, "output_path": {:?}}}"#,
        target.display().to_string()
    );
    let spec = write(dir.path(), "spec.json", &text);
    assert!(ppt(&["distance", "--spec", &spec], None).status.success());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.contains(r#""value": "inf""#), "{written}");
}
