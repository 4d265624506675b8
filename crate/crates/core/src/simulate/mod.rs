//! Samplers for Poisson, Cox and Gibbs processes, and two explicit couplings.
//!
//! Every sampler is a pure function of its [`SeedSpec`]. Replicated draws
//! take `seed.child(i)` for replicate `i`, see [`crate::replicate`].

mod coupling;
mod cox;
mod gibbs;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub use coupling::{
    sample_coupled_superposition, sample_coupled_timechange, CoupledPair, SuperpositionCoupling, TimeChangeKind,
    TimeChangeSpec,
};
pub use cox::{sample_cox, CoxDraw, Mixer};
pub use gibbs::{
    acceptance_rate, sample_gibbs, sample_gibbs_shared, GibbsDraw, GibbsModel, GibbsOptions, PairPotential,
    SelfInteraction,
};

use crate::{Configuration, Error, IntensityMeasure, Result, SeedSpec};

/// `N ~ Poisson(mass)`; zero when the mass is zero.
pub(crate) fn poisson_count<R: Rng + ?Sized>(mass: f64, rng: &mut R) -> Result<usize> {
    if mass == 0.0 {
        return Ok(0);
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidValue(format!("Poisson mean {mass}")));
    }
    let law = Poisson::new(mass).map_err(|e| Error::InvalidValue(e.to_string()))?;
    Ok(law.sample(rng) as usize)
}

/// One draw of the Poisson process with intensity `sigma`: a
/// `Poisson(sigma(Lambda))` count of i.i.d. points from
/// `sigma / sigma(Lambda)`.
///
/// ```
/// use ppt_core::{simulate::sample_poisson, IntensityMeasure, SeedSpec, Window};
///
/// let sigma = IntensityMeasure::constant(Window::unit(1).unwrap(), 2.0).unwrap();
/// let omega = sample_poisson(&sigma, SeedSpec::new(1, 0)).unwrap();
/// assert!(omega.is_inside(sigma.window()));
/// ```
pub fn sample_poisson(sigma: &IntensityMeasure, seed: SeedSpec) -> Result<Configuration> {
    let mut rng = seed.rng();
    sample_poisson_with(sigma, &mut rng)
}

pub(crate) fn sample_poisson_with<R: Rng + ?Sized>(sigma: &IntensityMeasure, rng: &mut R) -> Result<Configuration> {
    let n = poisson_count(sigma.total_mass(), rng)?;
    let mut omega = Configuration::empty(sigma.dim());
    for _ in 0..n {
        let x = sigma.sample_point(rng)?;
        omega.push_unchecked(&x);
    }
    Ok(omega)
}

/// A fixed i.i.d. sequence `x_0, x_1, ...` from `sigma / sigma(Lambda)`.
///
/// Configurations built as prefixes of one stream share their atoms, so the
/// total-variation distance between two of them is the difference of their
/// counts. This realizes the optimal coupling between any two laws whose
/// atoms, given the count, are i.i.d. from the same distribution.
#[derive(Debug, Clone)]
pub struct AtomStream {
    sigma: IntensityMeasure,
    seed: SeedSpec,
}

impl AtomStream {
    pub fn new(sigma: &IntensityMeasure, seed: SeedSpec) -> Self {
        AtomStream {
            sigma: sigma.clone(),
            seed,
        }
    }

    pub fn atom(&self, k: u64) -> Result<Vec<f64>> {
        self.sigma.sample_point(&mut self.seed.child(k).rng())
    }

    /// The configuration `x_0 + ... + x_{n-1}`.
    pub fn prefix(&self, n: usize) -> Result<Configuration> {
        let mut omega = Configuration::empty(self.sigma.dim());
        for k in 0..n as u64 {
            omega.push_unchecked(&self.atom(k)?);
        }
        Ok(omega)
    }
}

/// Poisson draw whose atoms are the first `N` points of `atoms`.
pub fn sample_poisson_shared(atoms: &AtomStream, seed: SeedSpec) -> Result<Configuration> {
    let n = poisson_count(atoms.sigma.total_mass(), &mut seed.rng())?;
    atoms.prefix(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{replicate, Estimate, Window};

    #[test]
    fn zero_mass_is_empty() {
        let sigma = IntensityMeasure::constant(Window::unit(2).unwrap(), 0.0).unwrap();
        for i in 0..20 {
            let omega = sample_poisson(&sigma, SeedSpec::new(i, 0)).unwrap();
            assert!(omega.is_empty());
        }
    }

    #[test]
    fn same_seed_same_draw() {
        let sigma = IntensityMeasure::constant(Window::unit(2).unwrap(), 5.0).unwrap();
        let a = sample_poisson(&sigma, SeedSpec::new(4, 2)).unwrap();
        let b = sample_poisson(&sigma, SeedSpec::new(4, 2)).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        assert!(a.is_inside(sigma.window()));
    }

    #[test]
    fn count_mean_and_variance() {
        let sigma = IntensityMeasure::constant(Window::unit(1).unwrap(), 2.0).unwrap();
        let n = 100_000;
        let counts: Vec<f64> = replicate(n, SeedSpec::new(21, 0), |_, s| {
            Ok(sample_poisson(&sigma, s)?.len() as f64)
        })
        .unwrap();
        let est = Estimate::from_samples(&counts, None);
        assert!((est.mean - 2.0).abs() <= 3.0 * (2.0 / n as f64).sqrt());
        // Variance estimator: Var(S^2) = mu4/n - sigma^4 (n-3)/(n(n-1)), mu4 = m + 3m^2.
        let var = counts.iter().map(|c| (c - est.mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let nf = n as f64;
        let var_se = ((2.0 + 12.0) / nf - 4.0 * (nf - 3.0) / (nf * (nf - 1.0))).sqrt();
        assert!((var - 2.0).abs() <= 3.0 * var_se, "{var} {var_se}");
    }

    #[test]
    fn shared_stream_prefixes() {
        let sigma = IntensityMeasure::constant(Window::unit(1).unwrap(), 3.0).unwrap();
        let stream = AtomStream::new(&sigma, SeedSpec::new(8, 0));
        let a = sample_poisson_shared(&stream, SeedSpec::new(1, 0)).unwrap();
        let b = sample_poisson_shared(&stream, SeedSpec::new(2, 0)).unwrap();
        let d = crate::metrics::rho1(&a, &b);
        assert_eq!(d, a.len().abs_diff(b.len()));
    }
}
