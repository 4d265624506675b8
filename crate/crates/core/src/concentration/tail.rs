use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::simulate::sample_poisson;
use crate::{metrics, replicate, Configuration, Error, Estimate, Functional, IntensityMeasure, Result, SeedSpec};

/// A deviation level `r` above a mean mass.
///
/// `mass` is `sigma(K)` for count tails, or the Lipschitz constant
/// `ess sup integral |grad_sharp F| d sigma` for the generic bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailQuery {
    pub mass: f64,
    pub r: f64,
}

impl TailQuery {
    pub fn new(mass: f64, r: f64) -> Result<Self> {
        let q = TailQuery { mass, r };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mass.is_finite() && self.mass > 0.0 && self.r.is_finite() && self.r > 0.0 {
            Ok(())
        } else {
            Err(Error::UndefinedInput(format!(
                "tail query needs finite mass > 0 and r > 0, got mass={} r={}",
                self.mass, self.r
            )))
        }
    }

    /// `[mass + r]`, the smallest count reaching the deviation level.
    pub fn threshold(&self) -> Result<u64> {
        upper_int_part(self.mass + self.r)
    }
}

/// Smallest positive integer `N >= value`.
///
/// ```
/// use ppt_core::concentration::upper_int_part;
///
/// assert_eq!(upper_int_part(2.3).unwrap(), 3);
/// assert_eq!(upper_int_part(2.0).unwrap(), 2);
/// assert_eq!(upper_int_part(0.5).unwrap(), 1);
/// assert!(upper_int_part(0.0).is_err());
/// ```
pub fn upper_int_part(value: f64) -> Result<u64> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::UndefinedInput(format!("upper integer part of {value}")));
    }
    if value >= u64::MAX as f64 {
        return Err(Error::UndefinedInput(format!(
            "upper integer part of {value} overflows"
        )));
    }
    Ok((value.ceil() as u64).max(1))
}

/// `ln P(N = k)` for `N ~ Poisson(mass)`, `mass > 0`.
fn ln_pmf(mass: f64, k: u64) -> f64 {
    k as f64 * mass.ln() - mass - ln_factorial(k)
}

/// `P(N >= k)` for `N ~ Poisson(mass)`.
///
/// Below the mean the complement of the lower sum is used; above it the
/// upper sum is accumulated from its largest term, so small tails keep full
/// relative precision. `mass = 0` is the point mass at zero; a negative or
/// non-finite mass gives NaN.
pub fn poisson_tail_exact(mass: f64, k: u64) -> f64 {
    if !(mass.is_finite() && mass >= 0.0) {
        return f64::NAN;
    }
    if k == 0 {
        return 1.0;
    }
    if mass == 0.0 {
        return 0.0;
    }
    if (k as f64) <= mass {
        // Terms rise up to the mode, which lies at or beyond k - 1.
        let lower: f64 = (0..k).map(|j| ln_pmf(mass, j).exp()).sum();
        return (1.0 - lower).max(0.0);
    }
    let lead = ln_pmf(mass, k);
    if lead < -745.0 {
        // Every term underflows; the ratio bound keeps the sum below 2 e^lead.
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = k;
    loop {
        j += 1;
        term *= mass / j as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    lead.exp() * sum
}

/// `P(N = k)` for `N ~ Poisson(mass)`.
pub fn poisson_pmf(mass: f64, k: u64) -> f64 {
    if mass == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    ln_pmf(mass, k).exp()
}

/// `exp(c (e^lambda - lambda - 1))`, the Laplace-transform bound for a
/// centred functional with Lipschitz constant `c`. Equals the moment
/// generating function of `N - c` for `N ~ Poisson(c)`.
pub fn laplace_bound_lipschitz(lambda: f64, c: f64) -> f64 {
    (c * (lambda.exp_m1() - lambda)).exp()
}

/// `exp(r - (r + c) ln(1 + r / c))` with `c = q.mass`.
///
/// ```
/// use ppt_core::concentration::{tail_bound_lipschitz, TailQuery};
///
/// let b = tail_bound_lipschitz(&TailQuery::new(1.0, 1.0).unwrap());
/// assert!((b - std::f64::consts::E / 4.0).abs() < 1e-15);
/// ```
pub fn tail_bound_lipschitz(q: &TailQuery) -> f64 {
    let TailQuery { mass: c, r } = *q;
    (r - (r + c) * (r / c).ln_1p()).exp()
}

/// `([s + r] / r) exp([s + r] - s - [s + r] ln([s + r] / s)) / sqrt(2 pi [s + r])`
/// with `s = q.mass`; bounds `P(N >= s + r)` for `N ~ Poisson(s)`.
pub fn tail_bound_count_sharp(q: &TailQuery) -> Result<f64> {
    q.validate()?;
    let TailQuery { mass: s, r } = *q;
    let a = q.threshold()? as f64;
    let log = (a / r).ln() + a - s - a * (a.ln() - s.ln()) - 0.5 * (2.0 * std::f64::consts::PI * a).ln();
    Ok(log.exp())
}

/// Deviation bound for `rho_1(., eta)` above its mean, for a Poisson process
/// of total mass `s`:
///
/// `sqrt(2 pi A) A^A e^{1/(12A)} / s^s * exp(B - A - B ln(B / (B - r))) / sqrt(2 pi B)`
///
/// with `A = [s]`, `B = [s + r]`.
pub fn tail_bound_rho_eta(total_mass: f64, r: f64) -> Result<f64> {
    let q = TailQuery::new(total_mass, r)?;
    let s = total_mass;
    let a = upper_int_part(s)? as f64;
    let b = q.threshold()? as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let prefactor = 0.5 * (two_pi * a).ln() + a * a.ln() + 1.0 / (12.0 * a) - s * s.ln();
    let body = b - a - b * (b / (b - r)).ln() - 0.5 * (two_pi * b).ln();
    Ok((prefactor + body).exp())
}

/// The two sides of the factorial sandwich
/// `sqrt(2 pi) N^{N + 1/2} e^{-N} <= N! <= sqrt(2 pi) N^{N + 1/2} e^{-N + 1/(12N)}`.
///
/// ```
/// use ppt_core::concentration::stirling_bounds;
///
/// let (lo, hi) = stirling_bounds(5).unwrap();
/// assert!(lo < 120.0 && 120.0 < hi);
/// ```
pub fn stirling_bounds(n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::UndefinedInput("Stirling bounds need N >= 1".into()));
    }
    let n = n as f64;
    let log = 0.5 * (2.0 * std::f64::consts::PI).ln() + (n + 0.5) * n.ln() - n;
    Ok((log.exp(), (log + 1.0 / (12.0 * n)).exp()))
}

/// One row of a tail comparison grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub mass: f64,
    pub r: f64,
    /// `P(N >= [mass + r])`, `N ~ Poisson(mass)`.
    pub exact: f64,
    pub bound_lipschitz: f64,
    pub bound_sharp: f64,
}

impl TailRow {
    pub fn new(q: &TailQuery) -> Result<Self> {
        q.validate()?;
        Ok(TailRow {
            mass: q.mass,
            r: q.r,
            exact: poisson_tail_exact(q.mass, q.threshold()?),
            bound_lipschitz: tail_bound_lipschitz(q),
            bound_sharp: tail_bound_count_sharp(q)?,
        })
    }

    /// Both bounds dominate the exact tail.
    pub fn dominated(&self) -> bool {
        self.exact <= self.bound_lipschitz && self.exact <= self.bound_sharp
    }
}

/// Count-tail rows over the product `masses x rs`, masses outermost.
pub fn tail_grid(masses: &[f64], rs: &[f64]) -> Result<Vec<TailRow>> {
    masses
        .iter()
        .flat_map(|&m| rs.iter().map(move |&r| TailRow::new(&TailQuery::new(m, r)?)))
        .collect()
}

/// Monte Carlo estimate of `E exp(lambda F)` under `Poisson(sigma)`.
pub fn laplace_transform_estimate<F: Functional + ?Sized>(
    f: &F,
    sigma: &IntensityMeasure,
    lambda: f64,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::InvalidValue("n_samples must be positive".into()));
    }
    let values = replicate(n_samples, seed, |_, s| {
        Ok((lambda * f.eval(&sample_poisson(sigma, s)?)?).exp())
    })?;
    Ok(Estimate::from_samples(&values, Some(seed)))
}

/// Tail of `rho_1(omega, eta)` above its mean at one deviation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoEtaRow {
    pub r: f64,
    /// `P(N >= [sigma(Lambda) + r])` through `rho_eta = N + eta(Lambda)`.
    pub exact: f64,
    /// Fraction of draws with `rho_eta >= E rho_eta + r`.
    pub empirical: Estimate,
    pub bound: f64,
}

/// Result of [`rho_eta_tail`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEtaTail {
    pub total_mass: f64,
    pub eta_len: usize,
    /// Draws checked for `rho_eta = omega(Lambda) + eta(Lambda)`.
    pub n_checked: u64,
    pub rows: Vec<RhoEtaRow>,
}

/// Compares [`tail_bound_rho_eta`] with the exact and empirical tails of
/// `rho_1(., eta)` under `Poisson(sigma)`.
///
/// A diffuse `sigma` never places atoms on `eta`, so
/// `rho_1(omega, eta) = omega(Lambda) + eta(Lambda)` almost surely. Every
/// draw is checked against that identity before the exact count tail is
/// used; a violation is [`Error::Inconsistent`].
pub fn rho_eta_tail(
    sigma: &IntensityMeasure,
    eta: &Configuration,
    rs: &[f64],
    n_samples: u64,
    seed: SeedSpec,
) -> Result<RhoEtaTail> {
    let s = sigma.total_mass();
    if s <= 0.0 {
        return Err(Error::ZeroMass);
    }
    if n_samples == 0 {
        return Err(Error::InvalidValue("n_samples must be positive".into()));
    }
    let draws = replicate(n_samples, seed, |_, sd| {
        let omega = sample_poisson(sigma, sd)?;
        let d = metrics::rho1(&omega, eta);
        if d != omega.len() + eta.len() {
            return Err(Error::Inconsistent(format!(
                "rho_1(omega, eta) = {d} but omega(Lambda) + eta(Lambda) = {}: shared atoms",
                omega.len() + eta.len()
            )));
        }
        Ok(d as f64)
    })?;
    let mean = s + eta.len() as f64;
    let rows = rs
        .iter()
        .map(|&r| {
            let q = TailQuery::new(s, r)?;
            let hits: Vec<f64> = draws.iter().map(|&d| f64::from(u8::from(d >= mean + r))).collect();
            Ok(RhoEtaRow {
                r,
                exact: poisson_tail_exact(s, q.threshold()?),
                empirical: Estimate::from_samples(&hits, Some(seed)),
                bound: tail_bound_rho_eta(s, r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RhoEtaTail {
        total_mass: s,
        eta_len: eta.len(),
        n_checked: n_samples,
        rows,
    })
}
