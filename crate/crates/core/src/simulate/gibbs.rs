use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{poisson_count, sample_poisson_with, AtomStream};
use crate::{replicate, Configuration, Error, Estimate, IntensityMeasure, Result, SeedSpec};

type PotentialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Pair potential `phi(x - y) >= 0`, evaluated on the difference vector.
#[derive(Clone)]
pub struct PairPotential {
    f: Arc<PotentialFn>,
    constant: Option<f64>,
    label: String,
}

impl fmt::Debug for PairPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairPotential").field("label", &self.label).finish()
    }
}

impl PairPotential {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        PairPotential {
            f: Arc::new(f),
            constant: None,
            label: "custom".into(),
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidValue(format!("constant potential {c}")));
        }
        Ok(PairPotential {
            f: Arc::new(move |_| c),
            constant: Some(c),
            label: format!("const:{c:?}"),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Some(c)` if the potential is the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn eval(&self, diff: &[f64]) -> Result<f64> {
        let v = (self.f)(diff);
        if !(v >= 0.0) {
            return Err(Error::InvalidValue(format!("potential {v} at {diff:?}")));
        }
        Ok(v)
    }
}

/// Whether the energy counts each atom's interaction with itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfInteraction {
    /// Sum over ordered pairs of distinct atoms.
    #[default]
    Excluded,
    /// Adds `phi(0)` once per atom.
    Included,
}

/// Gibbs process with density `exp(-V) / Z` against a Poisson law, where
/// `V(omega) = sum_{i != j} phi(x_i - x_j)` over ordered pairs.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    pub potential: PairPotential,
    pub self_interaction: SelfInteraction,
}

impl GibbsModel {
    pub fn new(potential: PairPotential) -> Self {
        GibbsModel {
            potential,
            self_interaction: SelfInteraction::Excluded,
        }
    }

    pub fn with_self_interaction(mut self, mode: SelfInteraction) -> Self {
        self.self_interaction = mode;
        self
    }

    /// Energy of a configuration with `n` atoms for a constant potential.
    fn constant_energy(&self, c: f64, n: usize) -> f64 {
        let n = n as f64;
        match self.self_interaction {
            SelfInteraction::Excluded => c * n * (n - 1.0),
            SelfInteraction::Included => c * n * n,
        }
    }

    pub fn energy(&self, omega: &Configuration) -> Result<f64> {
        if let Some(c) = self.potential.as_constant() {
            return Ok(self.constant_energy(c, omega.len()));
        }
        let n = omega.len();
        let mut diff = vec![0.0; omega.dim()];
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j && self.self_interaction == SelfInteraction::Excluded {
                    continue;
                }
                for (k, d) in diff.iter_mut().enumerate() {
                    *d = omega.atom(i)[k] - omega.atom(j)[k];
                }
                v += self.potential.eval(&diff)?;
            }
        }
        Ok(v)
    }

    /// Unnormalized density `exp(-V(omega))`, in `[0, 1]`.
    pub fn weight(&self, omega: &Configuration) -> Result<f64> {
        Ok((-self.energy(omega)?).exp())
    }

    /// `Z = E exp(-V)` under `Poisson(mass)` counts, for a constant
    /// potential, by direct series summation.
    pub fn partition_series(&self, mass: f64) -> Result<f64> {
        let c = self
            .potential
            .as_constant()
            .ok_or_else(|| Error::Unsupported("series partition function needs a constant potential".into()))?;
        Ok(count_series(mass, |k| (-self.constant_energy(c, k)).exp()))
    }

    /// Law of the count `N` under the Gibbs measure for a constant
    /// potential: `P(N = k) = exp(-V(k)) Poisson(mass)(k) / Z`.
    pub fn count_pmf(&self, mass: f64, k: usize) -> Result<f64> {
        let z = self.partition_series(mass)?;
        let c = self.potential.as_constant().expect("checked by partition_series");
        Ok((-self.constant_energy(c, k)).exp() * poisson_pmf(mass, k) / z)
    }

    /// `sum_k |P(N_poisson <= k) - P(N_gibbs <= k)|`, the exact
    /// total-variation transport cost between `Poisson(sigma)` and the Gibbs
    /// law for a constant potential: given the count, both place i.i.d.
    /// atoms from `sigma / sigma(Lambda)`, so only the counts need moving.
    pub fn count_law_distance(&self, mass: f64) -> Result<f64> {
        let last = (mass + 40.0 * mass.sqrt() + 60.0).ceil() as usize;
        let (mut fp, mut fg, mut total) = (0.0, 0.0, 0.0);
        for k in 0..=last {
            fp += poisson_pmf(mass, k);
            fg += self.count_pmf(mass, k)?;
            total += (fp - fg).abs();
        }
        Ok(total)
    }
}

pub(crate) fn poisson_pmf(mass: f64, k: usize) -> f64 {
    if mass == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let k = k as f64;
    (k * mass.ln() - mass - ln_gamma(k + 1.0)).exp()
}

/// `sum_k g(k) P(N = k)` for `N ~ Poisson(mass)` and `0 <= g <= 1`,
/// summed until the remaining Poisson mass is negligible.
pub(crate) fn count_series<G: Fn(usize) -> f64>(mass: f64, g: G) -> f64 {
    let last = (mass + 40.0 * mass.sqrt() + 60.0).ceil() as usize;
    (0..=last).map(|k| g(k) * poisson_pmf(mass, k)).sum()
}

/// Rejection-sampler settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsOptions {
    /// Smallest acceptance rate the sampler is expected to handle.
    pub acceptance_floor: f64,
    /// Proposals allowed per accepted draw.
    pub max_proposals: u64,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions {
            acceptance_floor: 1e-4,
            max_proposals: 1_000_000,
        }
    }
}

/// One Gibbs configuration with the acceptance statistics of the run that
/// produced it.
#[derive(Debug, Clone)]
pub struct GibbsDraw {
    pub configuration: Configuration,
    /// Fraction of accepted proposals (one accept over all proposals).
    pub acceptance: Estimate,
}

fn acceptance_estimate(proposals: u64, seed: SeedSpec) -> Estimate {
    let p = 1.0 / proposals as f64;
    Estimate {
        mean: p,
        std_error: (p * (1.0 - p) / proposals as f64).sqrt(),
        n_samples: proposals,
        seed: Some(seed),
    }
}

fn too_hard(options: &GibbsOptions) -> Error {
    Error::RejectionTooHard {
        proposals: options.max_proposals,
        accepted: 0,
        floor: options.acceptance_floor,
    }
}

/// Exact draw from the Gibbs law by rejection: propose
/// `omega ~ Poisson(sigma)` and accept with probability `exp(-V(omega))`.
pub fn sample_gibbs(
    model: &GibbsModel,
    sigma: &IntensityMeasure,
    seed: SeedSpec,
    options: &GibbsOptions,
) -> Result<GibbsDraw> {
    let mut rng = seed.rng();
    for proposals in 1..=options.max_proposals {
        let omega = sample_poisson_with(sigma, &mut rng)?;
        let w = model.weight(&omega)?;
        if rng.random::<f64>() < w {
            return Ok(GibbsDraw {
                configuration: omega,
                acceptance: acceptance_estimate(proposals, seed),
            });
        }
    }
    Err(too_hard(options))
}

/// Gibbs draw for a constant potential whose atoms are a prefix of `atoms`.
///
/// With a constant potential the energy depends on the count only, so given
/// `N` the atoms are i.i.d. from `sigma / sigma(Lambda)`; only the count is
/// drawn by rejection.
pub fn sample_gibbs_shared(
    model: &GibbsModel,
    atoms: &AtomStream,
    seed: SeedSpec,
    options: &GibbsOptions,
) -> Result<GibbsDraw> {
    let c = model.potential.as_constant().ok_or_else(|| {
        Error::Unsupported("shared-stream Gibbs sampling needs a potential depending on counts only".into())
    })?;
    let mut rng = seed.rng();
    let mass = atoms.sigma.total_mass();
    for proposals in 1..=options.max_proposals {
        let n = poisson_count(mass, &mut rng)?;
        if rng.random::<f64>() < (-model.constant_energy(c, n)).exp() {
            return Ok(GibbsDraw {
                configuration: atoms.prefix(n)?,
                acceptance: acceptance_estimate(proposals, seed),
            });
        }
    }
    Err(too_hard(options))
}

/// Monte Carlo estimate of the acceptance probability `E exp(-V(omega))`,
/// `omega ~ Poisson(sigma)`, from `n_samples` proposals.
pub fn acceptance_rate(
    model: &GibbsModel,
    sigma: &IntensityMeasure,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::InvalidValue(
            "acceptance rate needs at least one proposal".into(),
        ));
    }
    let w = replicate(n_samples, seed, |_, s| {
        model.weight(&sample_poisson_with(sigma, &mut s.rng())?)
    })?;
    Ok(Estimate::from_samples(&w, Some(seed)))
}
