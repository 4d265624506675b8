use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal};
use serde::{Deserialize, Serialize};

use crate::{Configuration, Error, IntensityMeasure, Result, SeedSpec};

/// Law of the random factor `Xi` of a Cox process with intensity
/// `Xi * sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mixer {
    /// `Xi = value` almost surely.
    Degenerate { value: f64 },
    /// Gamma with the given shape and scale; mean `shape * scale`.
    Gamma { shape: f64, scale: f64 },
    /// `Xi = exp(mu + sigma Z)`.
    LogNormal { mu: f64, sigma: f64 },
    /// `Xi = high` with probability `p_high`, `low` otherwise.
    TwoPoint { low: f64, high: f64, p_high: f64 },
}

impl Mixer {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Mixer::Degenerate { value } => value.is_finite() && value >= 0.0,
            Mixer::Gamma { shape, scale } => shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0,
            Mixer::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma >= 0.0,
            Mixer::TwoPoint { low, high, p_high } => {
                low.is_finite() && high.is_finite() && low >= 0.0 && high >= 0.0 && (0.0..=1.0).contains(&p_high)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidValue(format!("mixer parameters {self:?}")))
        }
    }

    /// Draws `Xi`; a draw that is not strictly positive is an error.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.validate()?;
        let xi = match *self {
            Mixer::Degenerate { value } => value,
            Mixer::Gamma { shape, scale } => Gamma::new(shape, scale)
                .map_err(|e| Error::InvalidValue(e.to_string()))?
                .sample(rng),
            Mixer::LogNormal { mu, sigma } => LogNormal::new(mu, sigma)
                .map_err(|e| Error::InvalidValue(e.to_string()))?
                .sample(rng),
            Mixer::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < p_high {
                    high
                } else {
                    low
                }
            }
        };
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::NonPositiveMixer(xi));
        }
        Ok(xi)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Mixer::Degenerate { value } => value,
            Mixer::Gamma { shape, scale } => shape * scale,
            Mixer::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Mixer::TwoPoint { low, high, p_high } => low + p_high * (high - low),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Mixer::Degenerate { .. } => 0.0,
            Mixer::Gamma { shape, scale } => shape * scale * scale,
            Mixer::LogNormal { mu, sigma } => ((sigma * sigma).exp() - 1.0) * (2.0 * mu + sigma * sigma).exp(),
            Mixer::TwoPoint { low, high, p_high } => p_high * (1.0 - p_high) * (high - low).powi(2),
        }
    }
}

/// A Cox draw together with the mixing factor that produced it.
#[derive(Debug, Clone)]
pub struct CoxDraw {
    pub configuration: Configuration,
    pub xi: f64,
}

/// Draws `Xi` from `mixer`, then a Poisson configuration with intensity
/// `Xi * base`.
pub fn sample_cox(base: &IntensityMeasure, mixer: &Mixer, seed: SeedSpec) -> Result<CoxDraw> {
    let mut rng = seed.rng();
    let xi = mixer.sample(&mut rng)?;
    if base.total_mass() == 0.0 {
        return Ok(CoxDraw {
            configuration: Configuration::empty(base.dim()),
            xi,
        });
    }
    // Scaling the count keeps the point law of `base`; no new quadrature.
    let n = super::poisson_count(xi * base.total_mass(), &mut rng)?;
    let mut omega = Configuration::empty(base.dim());
    for _ in 0..n {
        omega.push_unchecked(&base.sample_point(&mut rng)?);
    }
    Ok(CoxDraw {
        configuration: omega,
        xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{replicate, Estimate, Window};

    fn counts(base: &IntensityMeasure, mixer: Mixer, n: u64) -> Vec<f64> {
        replicate(n, SeedSpec::new(17, 0), |_, s| {
            Ok(sample_cox(base, &mixer, s)?.configuration.len() as f64)
        })
        .unwrap()
    }

    #[test]
    fn degenerate_mixer_is_poisson() {
        let base = IntensityMeasure::constant(Window::unit(1).unwrap(), 2.0).unwrap();
        let n = 100_000;
        let est = Estimate::from_samples(&counts(&base, Mixer::Degenerate { value: 1.0 }, n), None);
        assert!((est.mean - 2.0).abs() <= 3.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn two_point_mixer_total_variance() {
        let base = IntensityMeasure::constant(Window::unit(1).unwrap(), 2.0).unwrap();
        let mixer = Mixer::TwoPoint {
            low: 0.5,
            high: 1.5,
            p_high: 0.5,
        };
        // Var N = E Var(N|Xi) + Var E(N|Xi) = 2 + 4 * 0.25 = 3.
        assert_eq!(2.0 + 4.0 * mixer.variance(), 3.0);
        let n = 100_000;
        let c = counts(&base, mixer, n);
        let est = Estimate::from_samples(&c, None);
        assert!((est.mean - 2.0).abs() <= 3.0 * (3.0 / n as f64).sqrt());
        let var = c.iter().map(|x| (x - est.mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Fourth central moment from the mixture, by direct summation.
        let mu4 = {
            let law = |m: f64| statrs::distribution::Poisson::new(m).unwrap();
            use statrs::distribution::Discrete;
            (0..80u64)
                .map(|k| {
                    let p = 0.5 * law(1.0).pmf(k) + 0.5 * law(3.0).pmf(k);
                    p * (k as f64 - 2.0).powi(4)
                })
                .sum::<f64>()
        };
        let se = ((mu4 - 9.0) / n as f64).sqrt();
        assert!((var - 3.0).abs() <= 3.0 * se, "{var} {se}");
    }

    #[test]
    fn zero_base_mass_is_empty() {
        let base = IntensityMeasure::constant(Window::unit(1).unwrap(), 0.0).unwrap();
        let draw = sample_cox(&base, &Mixer::Gamma { shape: 2.0, scale: 1.0 }, SeedSpec::default()).unwrap();
        assert!(draw.configuration.is_empty());
    }

    #[test]
    fn non_positive_draw_is_an_error() {
        let base = IntensityMeasure::constant(Window::unit(1).unwrap(), 1.0).unwrap();
        let mixer = Mixer::TwoPoint {
            low: 0.0,
            high: 1.0,
            p_high: 0.0,
        };
        assert!(matches!(
            sample_cox(&base, &mixer, SeedSpec::default()),
            Err(Error::NonPositiveMixer(_))
        ));
    }

    #[test]
    fn mixer_json() {
        let m: Mixer = serde_json::from_str(r#"{"family":"gamma","shape":2.0,"scale":0.5}"#).unwrap();
        assert_eq!(m.mean(), 1.0);
        assert!(serde_json::from_str::<Mixer>(r#"{"family":"gamma","shape":2.0,"scale":0.5,"x":1}"#).is_err());
    }
}
