//! Upper bounds on Rubinstein distances to a Poisson law.
//!
//! | Target law | Distance | Bound | Function |
//! |---|---|---|---|
//! | Poisson, intensity `p sigma` | total variation | `integral |p - 1| d sigma` | [`bound_tv_poisson`] |
//! | Cox, intensity `Xi sigma` | total variation | `E|Xi - 1| sigma(Lambda)` | [`bound_tv_cox`] |
//! | Gibbs, pair potential `phi` | total variation | `2 integral integral phi(x - y) d sigma d sigma` | [`bound_tv_gibbs`] |
//! | density `L` against the Poisson law | total variation | `E integral |grad_sharp L| d sigma` | [`bound_tv_general`] |
//! | time change `t + U(t)` on the half-line | Wasserstein | `||U||_2` | [`bound_w2_halfline`] |
//! | marked time change | Wasserstein | see [`bound_w2_timechange`] | |

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gradient::gradient_draws;
use crate::quadrature::{integrate, integrate_interval, DEFAULT_REL_TOL};
use crate::simulate::{GibbsModel, Mixer, PairPotential, TimeChangeSpec};
use crate::{
    grad_sharp, replicate, Configuration, Density, Error, Estimate, ExtendedReal, Functional, IntensityMeasure, Result,
    SeedSpec,
};

/// How a bound value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// Value of a bound with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: ExtendedReal,
    pub method: Method,
    /// Zero unless `method` is Monte Carlo.
    pub std_error: f64,
    pub n_samples: Option<u64>,
    pub seed: Option<SeedSpec>,
    /// SHA-256 of the operation name and every input that determines the
    /// value, including sample size and seed.
    pub inputs_digest: String,
    pub warnings: Vec<String>,
    /// Estimated contribution of the domain beyond a finite horizon.
    pub truncation: Option<f64>,
}

impl BoundResult {
    fn new(value: f64, method: Method, inputs: &[String]) -> Self {
        BoundResult {
            value: ExtendedReal::from_f64(value),
            method,
            std_error: 0.0,
            n_samples: None,
            seed: None,
            inputs_digest: digest(inputs),
            warnings: Vec::new(),
            truncation: None,
        }
    }

    fn monte_carlo(est: &Estimate, inputs: &[String]) -> Self {
        let mut inputs = inputs.to_vec();
        inputs.push(format!("n_samples={}", est.n_samples));
        inputs.push(format!("seed={:?}", est.seed));
        BoundResult {
            std_error: est.std_error,
            n_samples: Some(est.n_samples),
            seed: est.seed,
            ..BoundResult::new(est.mean, Method::MonteCarlo, &inputs)
        }
    }

    /// The value as an [`Estimate`]; infinite values are not representable.
    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.value.to_f64(),
            std_error: self.std_error,
            n_samples: self.n_samples.unwrap_or(1),
            seed: self.seed,
        }
    }
}

fn digest(inputs: &[String]) -> String {
    let mut hasher = Sha256::new();
    for part in inputs {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn describe(sigma: &IntensityMeasure) -> String {
    format!(
        "sigma(window={:?}x{:?}, density={})",
        sigma.window().lower(),
        sigma.window().upper(),
        sigma.density().label()
    )
}

/// `integral |p - 1| d sigma`, by quadrature.
///
/// ```
/// use ppt_core::{bounds::bound_tv_poisson, Density, IntensityMeasure, Window};
///
/// let sigma = IntensityMeasure::lebesgue(Window::interval(0.0, 2.0).unwrap()).unwrap();
/// let p = Density::new(|x| x[0], 2.0).unwrap();
/// let b = bound_tv_poisson(&p, &sigma).unwrap();
/// assert!((b.value.to_f64() - 1.0).abs() < 1e-8);
/// ```
pub fn bound_tv_poisson(p: &Density, sigma: &IntensityMeasure) -> Result<BoundResult> {
    let value = integrate(
        |x| (p.eval(x) - 1.0).abs() * sigma.density().eval(x),
        sigma.window(),
        DEFAULT_REL_TOL,
    )?
    .value;
    Ok(BoundResult::new(
        value,
        Method::Quadrature,
        &["bound_tv_poisson".into(), describe(sigma), format!("p={}", p.label())],
    ))
}

/// Monte Carlo estimate of `E|Xi - 1| sigma(Lambda)`.
pub fn bound_tv_cox(base: &IntensityMeasure, mixer: &Mixer, n_samples: u64, seed: SeedSpec) -> Result<BoundResult> {
    if n_samples == 0 {
        return Err(Error::InvalidValue("n_samples must be positive".into()));
    }
    let mass = base.total_mass();
    let draws = replicate(n_samples, seed, |_, s| {
        Ok((mixer.sample(&mut s.rng())? - 1.0).abs() * mass)
    })?;
    let est = Estimate::from_samples(&draws, Some(seed));
    Ok(BoundResult::monte_carlo(
        &est,
        &["bound_tv_cox".into(), describe(base), format!("mixer={mixer:?}")],
    ))
}

/// `2 integral integral phi(x - y) d sigma(x) d sigma(y)`.
///
/// A constant potential `c` gives `2 c sigma(Lambda)^2` in closed form;
/// otherwise the double integral is evaluated by nested quadrature.
pub fn bound_tv_gibbs(potential: &PairPotential, sigma: &IntensityMeasure) -> Result<BoundResult> {
    let inputs = [
        "bound_tv_gibbs".to_string(),
        describe(sigma),
        format!("phi={}", potential.label()),
    ];
    if let Some(c) = potential.as_constant() {
        return Ok(BoundResult::new(
            2.0 * c * sigma.total_mass().powi(2),
            Method::ClosedForm,
            &inputs,
        ));
    }
    let window = sigma.window();
    let density = sigma.density();
    let d = window.dim();
    let failure = std::sync::Mutex::new(None::<Error>);
    let outer = integrate(
        |x| {
            let inner = integrate(
                |y| {
                    let diff: Vec<f64> = (0..d).map(|k| x[k] - y[k]).collect();
                    match potential.eval(&diff) {
                        Ok(v) => v * density.eval(y),
                        Err(e) => {
                            failure.lock().expect("unpoisoned").get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                window,
                1e-10,
            );
            match inner {
                Ok(q) => q.value * density.eval(x),
                Err(e) => {
                    failure.lock().expect("unpoisoned").get_or_insert(e);
                    f64::NAN
                }
            }
        },
        window,
        DEFAULT_REL_TOL,
    );
    if let Some(e) = failure.into_inner().expect("unpoisoned") {
        return Err(e);
    }
    Ok(BoundResult::new(2.0 * outer?.value, Method::Quadrature, &inputs))
}

/// `sqrt(integral_0^T U(t)^2 dt)`.
///
/// The mass beyond the horizon is estimated by `integral_T^{2T} U^2` and
/// reported in `truncation`.
pub fn bound_w2_halfline(tc: &TimeChangeSpec) -> Result<BoundResult> {
    let t = tc.horizon();
    let sq = |s: f64| tc.u(s).powi(2);
    let main = integrate_interval(sq, 0.0, t, 1e-10)?.value;
    let tail = integrate_interval(sq, t, 2.0 * t, 1e-8)?.value;
    let mut result = BoundResult::new(
        main.sqrt(),
        Method::Quadrature,
        &[
            "bound_w2_halfline".into(),
            format!("U={}", tc.label()),
            format!("T={t:?}"),
        ],
    );
    result.truncation = Some(tail);
    Ok(result)
}

/// The two forms of the marked time-change bound, for a finite family of
/// marks `(U_z, weight_z)`:
///
/// - `sum_z w_z integral_0^T U_z(t)^2 (1 + U_z'(t)) dt`
/// - `sum_z w_z integral_0^{v_z(T)} (r - v_z^{-1}(r))^2 dr`
///
/// They are equal by the change of variables `r = v_z(t)`.
pub fn timechange_forms(marks: &[(TimeChangeSpec, f64)]) -> Result<(f64, f64)> {
    if marks.is_empty() {
        return Err(Error::InvalidValue("time-change bound needs at least one mark".into()));
    }
    let mut direct = 0.0;
    let mut inverse = 0.0;
    for (tc, w) in marks {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidValue(format!("mark weight {w}")));
        }
        let t = tc.horizon();
        direct += w * integrate_interval(|s| tc.u(s).powi(2) * (1.0 + tc.u_prime(s)), 0.0, t, 1e-10)?.value;
        let failure = std::cell::Cell::new(false);
        let q = integrate_interval(
            |r| match tc.v_inverse(r.min(tc.v(t))) {
                Ok(s) => (r - s).powi(2),
                Err(_) => {
                    failure.set(true);
                    f64::NAN
                }
            },
            0.0,
            tc.v(t),
            1e-9,
        )?;
        if failure.get() {
            return Err(Error::Inconsistent("v^-1 failed inside its own range".into()));
        }
        inverse += w * q.value;
    }
    Ok((direct, inverse))
}

/// Square root of the marked time-change bound; see [`timechange_forms`].
///
/// The two forms must agree to `1e-6` relative, otherwise
/// [`Error::Inconsistent`].
pub fn bound_w2_timechange(marks: &[(TimeChangeSpec, f64)]) -> Result<BoundResult> {
    let (direct, inverse) = timechange_forms(marks)?;
    let scale = direct.abs().max(inverse.abs());
    if (direct - inverse).abs() > 1e-6 * scale {
        return Err(Error::Inconsistent(format!(
            "time-change forms disagree: {direct:e} vs {inverse:e}"
        )));
    }
    let mut inputs = vec!["bound_w2_timechange".to_string()];
    for (tc, w) in marks {
        inputs.push(format!("U={} T={:?} w={w:?}", tc.label(), tc.horizon()));
    }
    Ok(BoundResult::new(direct.max(0.0).sqrt(), Method::Quadrature, &inputs))
}

/// Inner sample count of [`bound_tv_general`].
pub const DEFAULT_INNER_SAMPLES: u64 = 16;

/// Nested Monte Carlo estimate of `E integral |grad_sharp_x L(omega)| d sigma(x)`,
/// `omega ~ Poisson(sigma)`, with [`DEFAULT_INNER_SAMPLES`] points `x` per
/// configuration.
///
/// `L` should be a probability density against the Poisson law. Its mean is
/// estimated from the same outer draws; a deviation from 1 beyond four
/// standard errors is reported as a warning.
pub fn bound_tv_general<L: Functional + ?Sized>(
    l: &L,
    sigma: &IntensityMeasure,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<BoundResult> {
    bound_tv_general_with(l, sigma, n_samples, DEFAULT_INNER_SAMPLES, seed)
}

/// [`bound_tv_general`] with an explicit number of inner points per
/// configuration.
pub fn bound_tv_general_with<L: Functional + ?Sized>(
    l: &L,
    sigma: &IntensityMeasure,
    n_samples: u64,
    inner_samples: u64,
    seed: SeedSpec,
) -> Result<BoundResult> {
    let draws = gradient_draws(l, sigma, n_samples, inner_samples, seed)?;
    let values: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let norms: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let est = Estimate::from_samples(&values, Some(seed));
    let norm = Estimate::from_samples(&norms, Some(seed));
    let mut result = BoundResult::monte_carlo(
        &est,
        &[
            "bound_tv_general".into(),
            describe(sigma),
            format!("inner_samples={inner_samples}"),
        ],
    );
    if (norm.mean - 1.0).abs() > 4.0 * norm.std_error {
        result.warnings.push(format!(
            "E[L] = {:.6} +/- {:.2e} is not 1: the density may be unnormalized",
            norm.mean, norm.std_error
        ));
    }
    Ok(result)
}

/// Density of `Poisson(p sigma)` against `Poisson(sigma)`:
/// `L(omega) = prod_i p(x_i) exp(integral (1 - p) d sigma)`.
#[derive(Debug, Clone)]
pub struct PoissonDensity {
    p: Density,
    log_normalizer: f64,
}

impl PoissonDensity {
    pub fn new(p: &Density, sigma: &IntensityMeasure) -> Result<Self> {
        let log_normalizer = sigma.integrate(|x| 1.0 - p.eval(x))?;
        Ok(PoissonDensity {
            p: p.clone(),
            log_normalizer,
        })
    }
}

impl Functional for PoissonDensity {
    fn eval(&self, omega: &Configuration) -> Result<f64> {
        let log_p: f64 = omega.atoms().map(|x| self.p.eval(x).ln()).sum();
        Ok((log_p + self.log_normalizer).exp())
    }
}

/// Normalized Gibbs density `exp(-V) / Z` against the Poisson law, for a
/// constant potential (`Z` by exact series).
#[derive(Debug, Clone)]
pub struct GibbsDensity {
    model: GibbsModel,
    z: f64,
}

impl GibbsDensity {
    pub fn new(model: &GibbsModel, sigma: &IntensityMeasure) -> Result<Self> {
        Ok(GibbsDensity {
            model: model.clone(),
            z: model.partition_series(sigma.total_mass())?,
        })
    }

    pub fn partition_function(&self) -> f64 {
        self.z
    }
}

impl Functional for GibbsDensity {
    fn eval(&self, omega: &Configuration) -> Result<f64> {
        Ok(self.model.weight(omega)? / self.z)
    }
}

/// `|grad_sharp L|` integrated against `sigma` at a fixed configuration, by
/// quadrature. Exact counterpart of one outer term of [`bound_tv_general`].
pub fn gradient_mass<L: Functional + ?Sized>(l: &L, omega: &Configuration, sigma: &IntensityMeasure) -> Result<f64> {
    let failure = std::sync::Mutex::new(None::<Error>);
    let q = sigma.integrate(|x| match grad_sharp(l, omega, x) {
        Ok(g) => g.abs(),
        Err(e) => {
            failure.lock().expect("unpoisoned").get_or_insert(e);
            f64::NAN
        }
    });
    if let Some(e) = failure.into_inner().expect("unpoisoned") {
        return Err(e);
    }
    q
}
