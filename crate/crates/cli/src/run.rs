use std::time::Instant;

use ppt_core::bounds::{
    bound_tv_cox, bound_tv_gibbs, bound_tv_poisson, bound_w2_halfline, bound_w2_timechange, timechange_forms,
};
use ppt_core::concentration::{
    cited_upper_bound, empty_witness, isoperimetric_bounds, isoperimetric_ratio, tail_grid, Event,
};
use ppt_core::metrics::{self, ExtendedReal};
use ppt_core::simulate::{
    sample_cox, sample_gibbs, sample_gibbs_shared, sample_poisson, sample_poisson_shared, AtomStream, GibbsModel,
    GibbsOptions, PairPotential, SuperpositionCoupling, TimeChangeSpec,
};
use ppt_core::transport::{
    bootstrap_dispersion, dual_lower_bound, estimate_rubinstein_empirical, EmpiricalTransport, Metric,
};
use ppt_core::{replicate, Configuration, Estimate, IntensityMeasure, SeedSpec};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::expr::parse_density_expr;
use crate::report::{Report, ResultValue, Results};
use crate::spec::*;

/// Runs an experiment. Reports of identical specs are byte-identical;
/// `wall_time_ms` stays `null`.
///
/// ```
/// use ppt_cli::{run_experiment, ExperimentSpec};
///
/// let spec = ExperimentSpec::from_json(
///     r#"{"kind": "bound", "parameters": {"family": "poisson", "p": "const:2", "window": [0, 1]}}"#,
/// ).unwrap();
/// let report = run_experiment(&spec).unwrap();
/// assert!(report.to_json().contains(r#""value": 1.0"#));
/// ```
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    run_with(spec, false)
}

/// [`run_experiment`], recording wall-clock time if `timing` is set.
pub fn run_with(spec: &ExperimentSpec, timing: bool) -> Result<Report> {
    let start = Instant::now();
    let params = spec.params()?;
    let mut out = Results::default();
    let ran = match &params {
        Params::Distance(p) => distance(p, &mut out),
        Params::Sample(p) => sample(p, spec, &mut out),
        Params::Bound(p) => bound(p, spec, &mut out),
        Params::Estimate(p) => estimate(p, spec, &mut out),
        Params::Tail(p) => tail(p, &mut out),
        Params::Isoperimetry(p) => isoperimetry(p, spec, &mut out),
        Params::Verify(p) => crate::scenarios::run(p.scenario, spec.seed, &mut out).map_err(CliError::from),
    };
    ran.map_err(|e| match e {
        CliError::Run { source, .. } => CliError::Run {
            spec: serde_json::to_string(spec).expect("specs serialize"),
            source,
        },
        other => other,
    })?;
    Ok(Report {
        spec_echo: spec.clone(),
        results: out.0,
        wall_time_ms: timing.then(|| start.elapsed().as_millis() as u64),
        library_version: crate::LIBRARY_VERSION.to_string(),
    })
}

/// Filled with the spec by [`run_with`].
impl From<ppt_core::Error> for CliError {
    fn from(source: ppt_core::Error) -> Self {
        CliError::Run {
            spec: String::new(),
            source,
        }
    }
}

fn configuration(points: &[Vec<f64>], dim: usize, path: &str) -> Result<Configuration> {
    Configuration::from_points(dim, points).map_err(|e| CliError::spec(path, e.to_string()))
}

fn distance(p: &DistanceParams, out: &mut Results) -> Result<()> {
    let dim = p
        .dim
        .or_else(|| p.omega.first().or(p.eta.first()).map(Vec::len))
        .ok_or_else(|| CliError::spec("parameters.dim", "required when omega and eta are both empty"))?;
    let omega = configuration(&p.omega, dim, "parameters.omega")?;
    let eta = configuration(&p.eta, dim, "parameters.eta")?;
    let value = match p.metric {
        DistanceMetric::Rho0 => ExtendedReal::Finite(metrics::rho0(&omega, &eta) as f64),
        DistanceMetric::Rho1 => ExtendedReal::Finite(metrics::rho1(&omega, &eta) as f64),
        DistanceMetric::Rho2 => metrics::rho2(&omega, &eta),
        DistanceMetric::Rho1Normalized => ExtendedReal::Finite(metrics::rho1_normalized(&omega, &eta)?),
        DistanceMetric::Rho2Normalized => ExtendedReal::Finite(metrics::rho2_normalized(&omega, &eta)),
        DistanceMetric::Rho2Marked => metrics::rho2_marked(&omega, &eta)?,
    };
    out.push("distance", ResultValue::Extended { value });
    Ok(())
}

fn potential(text: &str) -> Result<PairPotential> {
    let err = |source| CliError::Expr {
        path: "parameters.potential".into(),
        source,
    };
    parse_density_expr(text).map_err(err)?.to_potential(text).map_err(err)
}

fn draws_json(draws: &[Configuration], hex: bool) -> Result<Value> {
    draws
        .iter()
        .map(|c| serde_json::from_str(&c.to_json(hex)).map_err(CliError::from))
        .collect::<Result<Vec<Value>>>()
        .map(Value::Array)
}

fn counts(draws: &[Configuration], seed: SeedSpec) -> Estimate {
    let n: Vec<f64> = draws.iter().map(|c| c.len() as f64).collect();
    Estimate::from_samples(&n, Some(seed))
}

fn sample(p: &SampleParams, spec: &ExperimentSpec, out: &mut Results) -> Result<()> {
    let sigma = p.sigma()?;
    let (n, seed) = (spec.n_samples, spec.seed);
    let draws: Vec<Configuration> = match p.process {
        Process::Poisson => replicate(n, seed, |_, s| sample_poisson(&sigma, s))?,
        Process::Cox => {
            let mixer = p.mixer.as_ref().expect("checked by Params::check");
            let cox = replicate(n, seed, |_, s| sample_cox(&sigma, mixer, s))?;
            let xi: Vec<f64> = cox.iter().map(|d| d.xi).collect();
            out.estimate("xi", Estimate::from_samples(&xi, Some(seed)));
            cox.into_iter().map(|d| d.configuration).collect()
        }
        Process::Gibbs => {
            let model = GibbsModel::new(potential(p.potential.as_deref().expect("checked by Params::check"))?);
            let options = GibbsOptions::default();
            let gibbs = replicate(n, seed, |_, s| sample_gibbs(&model, &sigma, s, &options))?;
            // Each draw is one accept among its proposals.
            let proposals: u64 = gibbs.iter().map(|d| d.acceptance.n_samples).sum();
            let rate = n as f64 / proposals as f64;
            out.estimate(
                "acceptance",
                Estimate {
                    mean: rate,
                    std_error: (rate * (1.0 - rate) / proposals as f64).sqrt(),
                    n_samples: proposals,
                    seed: Some(seed),
                },
            );
            gibbs.into_iter().map(|d| d.configuration).collect()
        }
    };
    out.estimate("count", counts(&draws, seed));
    out.scalar("total_mass", sigma.total_mass());
    if p.include_draws {
        let value = draws_json(&draws, p.hex)?;
        out.push("draws", ResultValue::Data { value });
    }
    Ok(())
}

fn bound(p: &BoundParams, spec: &ExperimentSpec, out: &mut Results) -> Result<()> {
    let sigma = p.sigma()?;
    let result = match p.family {
        BoundFamily::Poisson => {
            let density = p.density(&sigma)?.expect("checked by Params::check");
            bound_tv_poisson(&density, &sigma)?
        }
        BoundFamily::Cox => bound_tv_cox(
            &sigma,
            p.mixer.as_ref().expect("checked by Params::check"),
            spec.n_samples,
            spec.seed,
        )?,
        BoundFamily::Gibbs => bound_tv_gibbs(
            &potential(p.potential.as_deref().expect("checked by Params::check"))?,
            &sigma,
        )?,
        BoundFamily::Halfline => bound_w2_halfline(&TimeChangeSpec::from_kind(
            p.time_change.expect("checked by Params::check"),
        )?)?,
        BoundFamily::Timechange => {
            let marks = p
                .marks
                .iter()
                .map(|m| Ok((TimeChangeSpec::from_kind(m.time_change)?, m.weight)))
                .collect::<ppt_core::Result<Vec<_>>>()?;
            let (direct, inverse) = timechange_forms(&marks)?;
            out.data("integral_forms", &json!({"direct": direct, "inverse": inverse}));
            bound_w2_timechange(&marks)?
        }
    };
    out.bound("bound", result);
    Ok(())
}

/// Mean of `f` over coupled or independent draws.
fn mean_of<T, F: Fn(&T) -> f64>(items: &[T], f: F, seed: SeedSpec) -> Estimate {
    let v: Vec<f64> = items.iter().map(f).collect();
    Estimate::from_samples(&v, Some(seed))
}

/// Bootstrap replicates behind the reported dispersion.
const BOOTSTRAP: u64 = 200;

/// Records the plug-in estimate and, when finite, its bootstrap dispersion.
fn empirical(
    mu: &[Configuration],
    nu: &[Configuration],
    metric: Metric,
    primal: &EmpiricalTransport,
    seed: SeedSpec,
    out: &mut Results,
) -> Result<()> {
    out.data("empirical", primal);
    if !primal.cost.is_infinite() {
        out.data(
            "dispersion",
            &bootstrap_dispersion(mu, nu, metric, BOOTSTRAP, seed.branch(3))?,
        );
    }
    Ok(())
}

fn estimate(p: &EstimateParams, spec: &ExperimentSpec, out: &mut Results) -> Result<()> {
    let sigma = p.sigma()?;
    if p.n_side == 0 {
        return Err(CliError::spec("parameters.n_side", "must be positive"));
    }
    let (n, seed) = (spec.n_samples, spec.seed);
    let side = p.n_side as u64;
    match p.target {
        Target::Poisson => {
            let density = p.density(&sigma)?.expect("checked by Params::check");
            let coupling = SuperpositionCoupling::new(&sigma, &density)?;
            let pairs = replicate(n.max(side), seed.branch(0), |_, s| coupling.sample(s))?;
            let (lefts, rights): (Vec<_>, Vec<_>) = pairs.iter().map(|c| (c.left.clone(), c.right.clone())).unzip();
            let (mu, nu) = (&lefts[..p.n_side], &rights[..p.n_side]);
            let primal = estimate_rubinstein_empirical(mu, nu, p.metric)?;
            empirical(mu, nu, p.metric, &primal, seed, out)?;
            if p.metric == Metric::Rho1 {
                out.estimate(
                    "coupling_cost",
                    mean_of(
                        &pairs[..n as usize],
                        |c| c.cost_hint.unwrap_or(f64::NAN),
                        seed.branch(0),
                    ),
                );
                let count = |w: &Configuration| w.len() as f64;
                let dual = dual_lower_bound(&count, &lefts[..n as usize], &rights[..n as usize])?;
                out.estimate("dual_count_witness", dual);
                out.bound("bound", bound_tv_poisson(&density, &sigma)?);
            }
        }
        Target::Gibbs => {
            let phi = potential(p.potential.as_deref().expect("checked by Params::check"))?;
            let model = GibbsModel::new(phi.clone());
            let options = GibbsOptions::default();
            let (poisson, gibbs) = if phi.as_constant().is_some() {
                // Count-only energy: let both sides read one atom stream.
                let atoms = AtomStream::new(&sigma, seed.branch(0));
                (
                    replicate(side, seed.branch(1), |_, s| sample_poisson_shared(&atoms, s))?,
                    replicate(side, seed.branch(2), |_, s| {
                        sample_gibbs_shared(&model, &atoms, s, &options).map(|d| d.configuration)
                    })?,
                )
            } else {
                (
                    replicate(side, seed.branch(1), |_, s| sample_poisson(&sigma, s))?,
                    replicate(side, seed.branch(2), |_, s| {
                        sample_gibbs(&model, &sigma, s, &options).map(|d| d.configuration)
                    })?,
                )
            };
            let primal = estimate_rubinstein_empirical(&poisson, &gibbs, p.metric)?;
            empirical(&poisson, &gibbs, p.metric, &primal, seed, out)?;
            if p.metric == Metric::Rho1 {
                out.bound("bound", bound_tv_gibbs(&phi, &sigma)?);
                if phi.as_constant().is_some() {
                    out.scalar("exact_cost", model.count_law_distance(sigma.total_mass())?);
                }
            }
        }
    }
    Ok(())
}

fn tail(p: &TailParams, out: &mut Results) -> Result<()> {
    let rows = tail_grid(&p.masses, &p.rs)?;
    if let Some(path) = &p.csv {
        let mut w = csv::Writer::from_path(path)?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    let dominated = rows.iter().all(|r| r.dominated());
    out.data("grid", &rows);
    out.push(
        "dominated",
        ResultValue::Data {
            value: Value::Bool(dominated),
        },
    );
    Ok(())
}

fn event_of(e: &EventSpec, i: usize) -> Result<Event> {
    Ok(match &e.region {
        None => Event::count(e.relation, e.k),
        Some(w) => Event::count_in(w.window(&format!("parameters.events[{i}].region"))?, e.relation, e.k),
    })
}

fn isoperimetry(p: &IsoperimetryParams, spec: &ExperimentSpec, out: &mut Results) -> Result<()> {
    let sigma: IntensityMeasure = p.sigma()?;
    for (i, e) in p.events.iter().enumerate() {
        let event = event_of(e, i)?;
        let ratio = isoperimetric_ratio(&event, &sigma, spec.n_samples, spec.seed.child(i as u64))?;
        out.data(&format!("ratio[{i}]"), &ratio);
    }
    let mass = sigma.total_mass();
    let (lo, hi) = isoperimetric_bounds(mass)?;
    out.data("stated_bounds", &json!({"lower": lo, "upper": hi}));
    out.scalar("cited_upper_bound", cited_upper_bound(mass));
    out.data("empty_witness", &empty_witness(mass)?);
    Ok(())
}
