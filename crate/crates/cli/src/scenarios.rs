//! End-to-end checks run by `verify` specs.
//!
//! Each scenario draws its own randomness from the spec seed and records
//! named `check` entries, plus the numbers behind them. Sample sizes are
//! fixed per scenario so that a scenario name identifies its tolerance;
//! `n_samples` of the spec does not apply.

use itertools::Itertools;
use ppt_core::bounds::{
    bound_tv_general, bound_tv_gibbs, bound_tv_poisson, bound_w2_halfline, timechange_forms, PoissonDensity,
};
use ppt_core::concentration::{
    coarea_check, empty_witness, isoperimetric_ratio, laplace_bound_lipschitz, poincare_l1_check, poisson_pmf,
    stirling_bounds, tail_bound_count_sharp, tail_bound_lipschitz, tail_grid, CountRelation, Event, TailQuery,
};
use ppt_core::metrics::{rho1, rho1_normalized, rho2};
use ppt_core::simulate::{
    sample_coupled_timechange, sample_gibbs_shared, sample_poisson_shared, AtomStream, CoupledPair, GibbsModel,
    GibbsOptions, PairPotential, SuperpositionCoupling, TimeChangeSpec,
};
use ppt_core::transport::{
    assignment_solve, bootstrap_dispersion, dual_lower_bound, estimate_rubinstein_empirical, exact_oracle_discrete,
    CostMatrix, Metric,
};
use ppt_core::{replicate, Configuration, Density, Estimate, IntensityMeasure, SeedSpec, Window};
use rand::Rng;
use serde_json::json;

use crate::report::Results;
use crate::spec::Scenario;

type Outcome = ppt_core::Result<()>;

pub(crate) fn run(scenario: Scenario, seed: SeedSpec, out: &mut Results) -> Outcome {
    match scenario {
        Scenario::AssignmentExactness => assignment_exactness(seed, out),
        Scenario::Rho2Correctness => rho2_correctness(seed, out),
        Scenario::PoissonTightness => poisson_tightness(seed, out),
        Scenario::ExactOracle => exact_oracle(out),
        Scenario::GibbsBound => gibbs_bound(seed, out),
        Scenario::Halfline => halfline(seed, out),
        Scenario::GeneralBound => general_bound(seed, out),
        Scenario::TailGrid => tail_grid_check(out),
        Scenario::LaplaceSharpness => laplace_sharpness(out),
        Scenario::Stirling => stirling(out),
        Scenario::PoincareCoarea => poincare_coarea(seed, out),
        Scenario::Isoperimetry => isoperimetry(seed, out),
        Scenario::Semicontinuity => semicontinuity(out),
    }
}

fn unit_interval() -> Window {
    Window::unit(1).expect("unit interval")
}

fn describe(e: &Estimate) -> String {
    format!("{:.6} +- {:.6} (n = {})", e.mean, e.std_error, e.n_samples)
}

const ASSIGNMENT_CASES: u64 = 1000;

/// Hungarian solutions against permutation enumeration, compared exactly.
fn assignment_exactness(seed: SeedSpec, out: &mut Results) -> Outcome {
    let mut rng = seed.branch(1).rng();
    let mut mismatches = 0;
    for case in 0..ASSIGNMENT_CASES {
        let n = rng.random_range(1..=6usize);
        let entries: Vec<f64> = (0..n * n)
            .map(|_| {
                if case % 2 == 0 {
                    rng.random_range(0..100u32) as f64
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let cost = CostMatrix::new(n, n, entries.clone())?;
        let solved = assignment_solve(&cost)?;
        let brute = (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().fold(0.0, |acc, (i, &j)| acc + entries[i * n + j]))
            .fold(f64::INFINITY, f64::min);
        if solved.cost != brute {
            mismatches += 1;
        }
    }
    out.check(
        "assignment_matches_enumeration",
        mismatches == 0,
        format!("{mismatches} of {ASSIGNMENT_CASES} matrices differ"),
    );
    Ok(())
}

const RHO2_CASES: u64 = 500;

fn random_configuration<R: Rng>(rng: &mut R, n: usize, dim: usize) -> ppt_core::Result<Configuration> {
    Configuration::from_flat(dim, (0..n * dim).map(|_| rng.random::<f64>()).collect())
}

/// `rho2` against the square root of the smallest sum of squared
/// distances over all pairings.
fn rho2_correctness(seed: SeedSpec, out: &mut Results) -> Outcome {
    let mut rng = seed.branch(2).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..RHO2_CASES {
        let n = rng.random_range(0..=6usize);
        let dim = rng.random_range(1..=2usize);
        let a = random_configuration(&mut rng, n, dim)?;
        let b = random_configuration(&mut rng, n, dim)?;
        let brute = (0..n)
            .permutations(n)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| {
                        a.atom(i)
                            .iter()
                            .zip(b.atom(j))
                            .map(|(x, y)| (x - y) * (x - y))
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let got = rho2(&a, &b).to_f64();
        worst = worst.max((got - brute).abs());
    }
    out.scalar("max_abs_error", worst);
    out.check(
        "rho2_matches_enumeration",
        worst <= 1e-12,
        format!("max |error| {worst:e} over {RHO2_CASES} pairs, tolerance 1e-12"),
    );
    Ok(())
}

const COUPLED_DRAWS: u64 = 100_000;
const EMPIRICAL_SIDE: usize = 200;
/// Bootstrap replicates behind the dispersion of an empirical estimate.
const BOOTSTRAP: u64 = 200;

/// `Poisson(Leb[0,1])` against `Poisson(2 Leb[0,1])`: the bound equals 1 and
/// is attained by the superposition coupling.
fn poisson_tightness(seed: SeedSpec, out: &mut Results) -> Outcome {
    let sigma = IntensityMeasure::lebesgue(unit_interval())?;
    let p = Density::constant(2.0)?;
    let bound = bound_tv_poisson(&p, &sigma)?;
    let b = bound.value.to_f64();
    out.check("bound_equals_one", (b - 1.0).abs() <= 1e-12, format!("bound {b:?}"));
    out.bound("bound", bound);

    let coupling = SuperpositionCoupling::new(&sigma, &p)?;
    let pairs: Vec<CoupledPair> = replicate(COUPLED_DRAWS, seed.branch(3), |_, s| coupling.sample(s))?;
    let costs: Vec<f64> = pairs.iter().map(|c| c.cost_hint.unwrap_or(f64::NAN)).collect();
    let cost = Estimate::from_samples(&costs, Some(seed.branch(3)));
    out.check("coupling_attains_bound", cost.within(1.0, 3.0), describe(&cost));
    out.estimate("coupling_cost", cost);

    let (lefts, rights): (Vec<Configuration>, Vec<Configuration>) =
        pairs.into_iter().map(|c| (c.left, c.right)).unzip();
    let count = |w: &Configuration| w.len() as f64;
    let dual = dual_lower_bound(&count, &lefts, &rights)?;
    out.check("count_witness_attains_bound", dual.within(1.0, 3.0), describe(&dual));
    out.estimate("dual_count_witness", dual);

    let (mu, nu) = (&lefts[..EMPIRICAL_SIDE], &rights[..EMPIRICAL_SIDE]);
    let primal = estimate_rubinstein_empirical(mu, nu, Metric::Rho1)?;
    let spread = bootstrap_dispersion(mu, nu, Metric::Rho1, BOOTSTRAP, seed.branch(12))?;
    let value = primal.cost.to_f64();
    let lo = dual.mean - 3.0 * spread.std_dev.hypot(dual.std_error);
    let hi = b + 3.0 * spread.std_dev;
    out.check(
        "primal_between_dual_and_bound",
        (lo..=hi).contains(&value),
        format!(
            "primal {value:.6} in [{lo:.6}, {hi:.6}], dispersion {:.6}",
            spread.std_dev
        ),
    );
    out.data("primal", &primal);
    out.data("primal_dispersion", &spread);
    Ok(())
}

/// Exact cost by enumeration of count vectors on one cell.
fn exact_oracle(out: &mut Results) -> Outcome {
    let t = exact_oracle_discrete(&[1.0], &[2.0], 60)?;
    // Closed form on one cell: |2 - 1| * 1.
    out.scalar("exact_cost", t);
    out.check(
        "oracle_matches_closed_form",
        (t - 1.0).abs() <= 1e-8,
        format!("oracle {t:?}, closed form 1"),
    );
    Ok(())
}

const GIBBS_SIDE: u64 = 200;

/// Constant potential 0.05 on `Leb[0,1]`: bound `0.1` against an empirical
/// estimate from draws sharing their atoms.
fn gibbs_bound(seed: SeedSpec, out: &mut Results) -> Outcome {
    let sigma = IntensityMeasure::lebesgue(unit_interval())?;
    let potential = PairPotential::constant(0.05)?;
    let bound = bound_tv_gibbs(&potential, &sigma)?;
    let b = bound.value.to_f64();
    out.check(
        "bound_value",
        (b - 0.1).abs() <= 1e-12,
        format!("bound {b:?}, expected 0.1"),
    );
    out.bound("bound", bound);

    let model = GibbsModel::new(potential);
    let atoms = AtomStream::new(&sigma, seed.branch(4));
    let poisson = replicate(GIBBS_SIDE, seed.branch(5), |_, s| sample_poisson_shared(&atoms, s))?;
    let options = GibbsOptions::default();
    let gibbs = replicate(GIBBS_SIDE, seed.branch(6), |_, s| {
        sample_gibbs_shared(&model, &atoms, s, &options).map(|d| d.configuration)
    })?;
    let empirical = estimate_rubinstein_empirical(&poisson, &gibbs, Metric::Rho1)?;
    let spread = bootstrap_dispersion(&poisson, &gibbs, Metric::Rho1, BOOTSTRAP, seed.branch(13))?;
    let value = empirical.cost.to_f64();
    let limit = b + 3.0 * spread.std_dev;
    out.check(
        "empirical_below_bound",
        value <= limit,
        format!("empirical {value:.6} <= {limit:.6}, dispersion {:.6}", spread.std_dev),
    );
    out.data("empirical", &empirical);
    out.data("empirical_dispersion", &spread);
    out.scalar("exact_cost", model.count_law_distance(sigma.total_mass())?);
    Ok(())
}

const HALFLINE_HORIZON: f64 = 200.0;

/// `U(t) = t / (1 + t^3)` on the half-line: bound `1/sqrt(3)` and the
/// mean cost of the time-change coupling below it.
fn halfline(seed: SeedSpec, out: &mut Results) -> Outcome {
    let tc = TimeChangeSpec::cubic_decay(1.0, HALFLINE_HORIZON)?;
    let bound = bound_w2_halfline(&tc)?;
    let b = bound.value.to_f64();
    let closed = 1.0 / 3f64.sqrt();
    out.check(
        "bound_value",
        (b - closed).abs() <= 1e-6 && (b - 0.577_350).abs() <= 1e-6,
        format!("bound {b:.9}, 1/sqrt(3) = {closed:.9}"),
    );
    out.bound("bound", bound);

    let pairs = replicate(COUPLED_DRAWS, seed.branch(7), |_, s| sample_coupled_timechange(&tc, s))?;
    let costs: Vec<f64> = pairs.iter().map(|c| c.cost_hint.unwrap_or(f64::NAN)).collect();
    let cost = Estimate::from_samples(&costs, Some(seed.branch(7)));
    out.check(
        "coupling_below_bound",
        cost.mean <= b + 3.0 * cost.std_error,
        describe(&cost),
    );
    out.estimate("coupling_cost", cost);

    let (direct, inverse) = timechange_forms(&[(tc, 1.0)])?;
    let rel = (direct - inverse).abs() / direct.abs().max(f64::MIN_POSITIVE);
    out.check(
        "integral_forms_agree",
        rel <= 1e-6,
        format!("direct {direct:.12}, inverse {inverse:.12}, relative gap {rel:e}"),
    );
    Ok(())
}

const GENERAL_DRAWS: u64 = 10_000;

/// The general gradient bound with `L = dPoisson(2 sigma)/dPoisson(sigma)`
/// reproduces the closed form `1`.
fn general_bound(seed: SeedSpec, out: &mut Results) -> Outcome {
    let sigma = IntensityMeasure::lebesgue(unit_interval())?;
    let l = PoissonDensity::new(&Density::constant(2.0)?, &sigma)?;
    let bound = bound_tv_general(&l, &sigma, GENERAL_DRAWS, seed.branch(8))?;
    let e = bound.estimate();
    out.check("matches_closed_form", e.within(1.0, 3.0), describe(&e));
    out.bound("bound", bound);
    Ok(())
}

/// Both tail bounds dominate the exact Poisson tail on the default grid.
fn tail_grid_check(out: &mut Results) -> Outcome {
    let rows = tail_grid(&crate::spec::DEFAULT_MASSES, &crate::spec::DEFAULT_RS)?;
    let failing = rows.iter().filter(|r| !r.dominated()).count();
    out.check(
        "bounds_dominate_exact",
        failing == 0,
        format!("{failing} of {} rows violated", rows.len()),
    );
    let far = rows.iter().filter(|r| r.r >= 3.0 * r.mass);
    let (n_far, not_sharper) = far.fold((0, 0), |(n, bad), r| {
        (n + 1, bad + usize::from(r.bound_sharp >= r.bound_lipschitz))
    });
    out.check(
        "sharp_bound_wins_far_out",
        not_sharper == 0,
        format!("{not_sharper} of {n_far} rows with r >= 3s where the sharp bound is not smaller"),
    );

    let q = TailQuery::new(1.0, 1.0)?;
    let lipschitz = tail_bound_lipschitz(&q);
    let e = std::f64::consts::E;
    out.check(
        "lipschitz_at_unit",
        (lipschitz - e / 4.0).abs() <= 1e-6 && (lipschitz - 0.679_570).abs() <= 1e-6,
        format!("{lipschitz:.9}, e/4 = {:.9}", e / 4.0),
    );
    let sharp = tail_bound_count_sharp(&q)?;
    let closed = (e / 2.0) / (4.0 * std::f64::consts::PI).sqrt();
    out.check(
        "sharp_at_unit",
        (sharp - closed).abs() <= 1e-6,
        format!("{sharp:.9}, (e/2)/sqrt(4 pi) = {closed:.9}"),
    );
    out.scalar("sharp_at_unit", sharp);
    out.data("grid", &rows);
    Ok(())
}

/// The count MGF `E exp(lambda (N - s))` equals the Laplace bound.
fn laplace_sharpness(out: &mut Results) -> Outcome {
    let mut worst: f64 = 0.0;
    for mass in [0.5, 1.0, 2.5] {
        for lambda in [0.1, 0.5, 1.0] {
            let mgf: f64 = (0..400u64)
                .map(|k| poisson_pmf(mass, k) * (lambda * (k as f64 - mass)).exp())
                .sum();
            let bound = laplace_bound_lipschitz(lambda, mass);
            worst = worst.max((mgf - bound).abs() / bound);
        }
    }
    out.scalar("max_relative_gap", worst);
    out.check(
        "count_attains_laplace_bound",
        worst <= 1e-12,
        format!("max relative gap {worst:e}"),
    );
    Ok(())
}

/// `x` against the integer `n`, without rounding `n` to a float.
fn cmp_exact(x: f64, n: u128) -> std::cmp::Ordering {
    let floor = x.floor();
    (floor as u128).cmp(&n).then(if x > floor {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    })
}

/// The factorial sandwich for `N <= 20`, compared in exact integer
/// arithmetic.
fn stirling(out: &mut Results) -> Outcome {
    let mut fact: u128 = 1;
    let mut failures = Vec::new();
    for n in 1..=20u64 {
        fact *= u128::from(n);
        let (lo, hi) = stirling_bounds(n)?;
        if cmp_exact(lo, fact).is_gt() || cmp_exact(hi, fact).is_lt() {
            failures.push(n);
        }
    }
    out.check(
        "sandwich_contains_factorial",
        failures.is_empty(),
        format!("failing N: {failures:?}"),
    );
    Ok(())
}

const INEQUALITY_DRAWS: u64 = 10_000;

/// L1 Poincare inequality for four functionals and the co-area formula for
/// a count, under `2 Leb[0,1]`.
fn poincare_coarea(seed: SeedSpec, out: &mut Results) -> Outcome {
    let sigma = IntensityMeasure::constant(unit_interval(), 2.0)?;
    let half = Window::interval(0.0, 0.5)?;
    let eta = Configuration::from_scalars(&[0.2, 0.4])?;
    let k = half.clone();
    let count_k = move |w: &Configuration| w.count_in(&k) as f64;
    let capped = |w: &Configuration| (w.len() as f64).min(2.0);
    let to_eta = move |w: &Configuration| rho1(w, &eta) as f64;
    let at_least_three = |w: &Configuration| f64::from(u8::from(w.len() >= 3));
    let family: [(&str, &dyn ppt_core::Functional); 4] = [
        ("count_in_half", &count_k),
        ("capped_count", &capped),
        ("distance_to_eta", &to_eta),
        ("at_least_three", &at_least_three),
    ];
    for (i, (name, f)) in family.iter().enumerate() {
        let c = poincare_l1_check(*f, &sigma, INEQUALITY_DRAWS, seed.branch(9).child(i as u64))?;
        out.check(
            &format!("poincare_{name}"),
            c.holds(3.0),
            format!("E|F - EF| {} <= E int|DF| {}", describe(&c.lhs), describe(&c.rhs)),
        );
        out.data(&format!("poincare_{name}"), &c);
    }
    let k = half;
    let count_k = move |w: &Configuration| w.count_in(&k) as f64;
    let c = coarea_check(&count_k, &sigma, INEQUALITY_DRAWS, seed.branch(10))?;
    out.check(
        "coarea_sides_agree",
        c.agrees(3.0),
        format!("{} vs {}", describe(&c.lhs), describe(&c.rhs)),
    );
    out.check(
        "coarea_value",
        c.lhs.within(1.0, 3.0),
        format!("{}, exact sigma(K) = 1", describe(&c.lhs)),
    );
    out.data("coarea", &c);
    Ok(())
}

const ISOPERIMETRY_DRAWS: u64 = 10_000;

/// Witness ratios against the lower isoperimetric constant 1, and the
/// exact ratio of `{omega(Lambda) = 0}`.
fn isoperimetry(seed: SeedSpec, out: &mut Results) -> Outcome {
    let sigma = IntensityMeasure::lebesgue(unit_interval())?;
    let events = [
        ("empty", Event::count(CountRelation::Exactly, 0)),
        ("at_most_1", Event::count(CountRelation::AtMost, 1)),
        ("at_most_2", Event::count(CountRelation::AtMost, 2)),
        ("at_most_3", Event::count(CountRelation::AtMost, 3)),
        (
            "half_occupied",
            Event::count_in(Window::interval(0.0, 0.5)?, CountRelation::AtLeast, 1),
        ),
    ];
    for (i, (name, event)) in events.iter().enumerate() {
        let r = isoperimetric_ratio(event, &sigma, ISOPERIMETRY_DRAWS, seed.branch(11).child(i as u64))?;
        let e = &r.estimate;
        out.check(
            &format!("ratio_{name}"),
            e.mean >= 1.0 - 3.0 * e.std_error,
            format!("{} >= 1", describe(e)),
        );
        if i == 0 {
            let exact = r.exact.unwrap_or(f64::NAN);
            let closed = 2.0 / (1.0 - (-1f64).exp());
            out.check(
                "empty_event_exact_ratio",
                (exact - closed).abs() <= 1e-9,
                format!("{exact:.12}, 2/(1 - e^-1) = {closed:.12}"),
            );
        }
        out.data(&format!("ratio_{name}"), &r);
    }
    let witness = empty_witness(sigma.total_mass())?;
    out.check(
        "stated_upper_constant_flagged",
        witness.discrepancy,
        format!(
            "exact ratio {:.6} vs stated upper constant {:.6} (factor {:.3})",
            witness.exact_ratio, witness.stated_upper, witness.factor
        ),
    );
    out.data("empty_witness", &witness);
    Ok(())
}

const SEMICONTINUITY_N: usize = 50;

/// Normalized distances of `{0}` and `{1}`, with and without a shared far
/// atom, and the unnormalized count distance.
fn semicontinuity(out: &mut Results) -> Outcome {
    let a = Configuration::from_scalars(&[0.0])?;
    let b = Configuration::from_scalars(&[1.0])?;
    let base = rho1_normalized(&a, &b)?;
    out.check("normalized_pair", base == 2.0, format!("{base:?}, expected 2"));
    let mut off = Vec::new();
    for n in 2..=SEMICONTINUITY_N {
        let x = n as f64;
        let d = rho1_normalized(
            &Configuration::from_scalars(&[0.0, x])?,
            &Configuration::from_scalars(&[1.0, x])?,
        )?;
        if (d - 1.0).abs() > 1e-12 {
            off.push((n, d));
        }
    }
    out.check(
        "normalized_with_shared_atom",
        off.is_empty(),
        format!("values differing from 1 for n in 2..={SEMICONTINUITY_N}: {off:?}"),
    );
    // The shared atoms leave the window [-0.5, 1.5]; restricted, the
    // sequence is constant and the count distance stays at 2.
    let window = Window::interval(-0.5, 1.5)?;
    let liminf = (2..=SEMICONTINUITY_N)
        .map(|n| {
            let x = n as f64;
            let left = Configuration::from_scalars(&[0.0, x]).map(|c| c.restrict(&window));
            let right = Configuration::from_scalars(&[1.0, x]).map(|c| c.restrict(&window));
            left.and_then(|l| right.map(|r| rho1(&l, &r)))
        })
        .collect::<ppt_core::Result<Vec<_>>>()?
        .into_iter()
        .min()
        .unwrap_or(0);
    out.check(
        "count_distance_lower_semicontinuous",
        liminf >= 2,
        format!("liminf rho1 = {liminf} >= rho1({{0}}, {{1}}) = 2"),
    );
    out.data(
        "values",
        &json!({"normalized_pair": base, "liminf_rho1_restricted": liminf, "n_max": SEMICONTINUITY_N}),
    );
    Ok(())
}
