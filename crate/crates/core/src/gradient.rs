use crate::estimate::replicate;
use crate::simulate::sample_poisson;
use crate::{Configuration, Error, IntensityMeasure, Result, SeedSpec};

/// A real functional on configurations.
///
/// Closures `Fn(&Configuration) -> f64` implement it directly; implement the
/// trait by hand for functionals that can fail.
pub trait Functional: Sync {
    fn eval(&self, omega: &Configuration) -> Result<f64>;
}

impl<F> Functional for F
where
    F: Fn(&Configuration) -> f64 + Sync,
{
    fn eval(&self, omega: &Configuration) -> Result<f64> {
        Ok(self(omega))
    }
}

/// Add-one-point difference `F(omega + epsilon_x) - F(omega)`.
pub fn grad_sharp<F: Functional + ?Sized>(f: &F, omega: &Configuration, x: &[f64]) -> Result<f64> {
    let plus = omega.with_atom(x)?;
    Ok(f.eval(&plus)? - f.eval(omega)?)
}

/// Largest `|grad_sharp F(omega, x)|` over `n_samples` draws of
/// `omega ~ Poisson(sigma)` and `x ~ sigma / sigma(Lambda)`.
///
/// A functional that is 1-Lipschitz for the trivial or total-variation
/// distance never exceeds 1 here; a larger value disproves the claim.
pub fn rademacher_check<F: Functional + ?Sized>(
    f: &F,
    sigma: &IntensityMeasure,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<f64> {
    if sigma.total_mass() <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let values = replicate(n_samples, seed, |_, s| {
        let omega = sample_poisson(sigma, s.branch(0))?;
        let x = sigma.sample_point(&mut s.branch(1).rng())?;
        Ok(grad_sharp(f, &omega, &x)?.abs())
    })?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Per-draw pairs `(F(omega), sigma(Lambda) * mean_j |grad_sharp_{x_j} F(omega)|)`
/// with `omega ~ Poisson(sigma)` on `seed.child(i).branch(0)` and `inner`
/// points `x_j ~ sigma / sigma(Lambda)` on `.branch(1)`.
pub(crate) fn gradient_draws<F: Functional + ?Sized>(
    f: &F,
    sigma: &IntensityMeasure,
    n_samples: u64,
    inner: u64,
    seed: SeedSpec,
) -> Result<Vec<(f64, f64)>> {
    if n_samples == 0 || inner == 0 {
        return Err(Error::InvalidValue("sample counts must be positive".into()));
    }
    let mass = sigma.total_mass();
    replicate(n_samples, seed, |_, s| {
        let omega = sample_poisson(sigma, s.branch(0))?;
        let base = f.eval(&omega)?;
        if mass == 0.0 {
            return Ok((base, 0.0));
        }
        let mut rng = s.branch(1).rng();
        let mut acc = 0.0;
        for _ in 0..inner {
            let x = sigma.sample_point(&mut rng)?;
            acc += (f.eval(&omega.with_atom(&x)?)? - base).abs();
        }
        Ok((base, mass * acc / inner as f64))
    })
}
