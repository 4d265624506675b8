use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ppt_cli::{run_with, CliError, ExperimentSpec, Kind, Report};

/// Run a point-process transport experiment from a JSON spec.
#[derive(Debug, Parser)]
#[command(name = "ppt", version)]
struct Args {
    /// Experiment kind; must match the `kind` field of the spec.
    kind: Kind,
    /// Path to the JSON spec.
    #[arg(long)]
    spec: PathBuf,
    /// Write the report here instead of `output_path` or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override `seed.seed` of the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "PPT_THREADS")]
    threads: Option<usize>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

fn read_spec(args: &Args) -> Result<ExperimentSpec, CliError> {
    let path = args.spec.display().to_string();
    let text = std::fs::read_to_string(&args.spec).map_err(|source| CliError::Io { path, source })?;
    let mut spec = ExperimentSpec::from_json(&text)?;
    if spec.kind != args.kind {
        return Err(CliError::Spec {
            path: "kind".into(),
            message: format!("spec has kind `{}` but `{}` was requested", spec.kind, args.kind),
        });
    }
    if let Some(seed) = args.seed {
        spec.seed.seed = seed;
    }
    Ok(spec)
}

fn execute(args: &Args) -> Result<Report, CliError> {
    let spec = read_spec(args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        pool = pool.num_threads(k);
    }
    let report = pool.build()?.install(|| run_with(&spec, args.timing))?;
    let json = report.to_json();
    match args.out.clone().or_else(|| spec.output_path.clone().map(PathBuf::from)) {
        Some(path) => std::fs::write(&path, json + "\n").map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => println!("{json}"),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(report) => {
            for (name, passed, detail) in report.checks().filter(|c| !c.1) {
                eprintln!("check failed: {name} ({detail}) [passed = {passed}]");
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
