//! Acceptance gate: one line per criterion, then a nonzero exit if any
//! failed.
//!
//! Criteria 1 to 13 run the `verify` scenarios through `run_experiment` on a
//! four-thread pool and require every check to pass within the runtime
//! limit. Criterion 14 reruns every scenario and compares the reports byte
//! for byte.

use std::time::{Duration, Instant};

use ppt_cli::{run_experiment, ExperimentSpec, Report, Scenario};

const THREADS: usize = 4;
const SEED: u64 = 20_240_601;

/// Runtime limit of each scenario, in scenario order.
const LIMITS_S: [f64; 13] = [
    10.0, 10.0, 60.0, 30.0, 120.0, 60.0, 60.0, 1.0, 1.0, 1.0, 120.0, 60.0, 1.0,
];

fn spec_for(scenario: Scenario) -> ExperimentSpec {
    let text = format!(
        r#"{{"kind": "verify", "parameters": {{"scenario": "{}"}}, "seed": {{"seed": {SEED}, "stream_id": 0}}}}"#,
        scenario.name()
    );
    ExperimentSpec::from_json(&text).expect("verify specs parse")
}

fn timed_run(pool: &rayon::ThreadPool, spec: &ExperimentSpec) -> (Result<Report, String>, Duration) {
    let start = Instant::now();
    let report = pool.install(|| run_experiment(spec)).map_err(|e| e.to_string());
    (report, start.elapsed())
}

fn main() {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(THREADS)
        .build()
        .expect("thread pool");
    let suite = Instant::now();
    let mut failed = Vec::new();
    let mut first_runs = Vec::new();

    for (i, (scenario, limit)) in Scenario::ALL.iter().zip(LIMITS_S).enumerate() {
        let criterion = i + 1;
        let spec = spec_for(*scenario);
        let (report, elapsed) = timed_run(&pool, &spec);
        let secs = elapsed.as_secs_f64();
        let (ok, detail) = match &report {
            Ok(r) => {
                let bad: Vec<String> = r
                    .checks()
                    .filter(|c| !c.1)
                    .map(|(name, _, detail)| format!("{name}: {detail}"))
                    .collect();
                let n = r.checks().count();
                if n == 0 {
                    (false, "no checks recorded".to_string())
                } else if !bad.is_empty() {
                    (false, bad.join("; "))
                } else if secs >= limit {
                    (false, format!("{n} checks passed but runtime exceeds {limit} s"))
                } else {
                    (true, format!("{n} checks passed"))
                }
            }
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "criterion {criterion:>2} {:<22} {} {secs:>8.3} s (limit {limit} s)  {detail}",
            scenario.name(),
            if ok { "PASS" } else { "FAIL" },
        );
        if let Ok(r) = &report {
            for (name, passed, detail) in r.checks() {
                println!("      {} {name}: {detail}", if passed { "ok  " } else { "FAIL" });
            }
        }
        if !ok {
            failed.push(criterion);
        }
        first_runs.push(report.ok().map(|r| r.to_json()));
    }

    let mut differing = Vec::new();
    for (scenario, first) in Scenario::ALL.iter().zip(&first_runs) {
        let (again, _) = timed_run(&pool, &spec_for(*scenario));
        let same = matches!((first, again), (Some(a), Ok(b)) if *a == b.to_json());
        if !same {
            differing.push(scenario.name());
        }
    }
    let secs = suite.elapsed().as_secs_f64();
    let ok = differing.is_empty();
    println!(
        "criterion 14 {:<22} {} {secs:>8.3} s (whole suite)  {}",
        "determinism",
        if ok { "PASS" } else { "FAIL" },
        if ok {
            format!(
                "{} scenarios byte-identical on rerun with {THREADS} threads",
                Scenario::ALL.len()
            )
        } else {
            format!("reports differ: {differing:?}")
        }
    );
    if !ok {
        failed.push(14);
    }

    if failed.is_empty() {
        println!("acceptance: all 14 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
