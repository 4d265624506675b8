use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{emd, CostMatrix};
use crate::{metrics, replicate, Configuration, Error, Estimate, ExtendedReal, Functional, Result, SeedSpec};

/// Ground distance between configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rho0,
    Rho1,
    Rho2,
}

impl Metric {
    pub fn distance(&self, omega: &Configuration, eta: &Configuration) -> ExtendedReal {
        match self {
            Metric::Rho0 => ExtendedReal::Finite(metrics::rho0(omega, eta) as f64),
            Metric::Rho1 => ExtendedReal::Finite(metrics::rho1(omega, eta) as f64),
            Metric::Rho2 => metrics::rho2(omega, eta),
        }
    }
}

/// Optimal transport cost between two empirical measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTransport {
    /// Cost of the optimal plan between the uniform empirical measures.
    pub cost: ExtendedReal,
    /// Plan-weighted standard deviation of the pair costs over
    /// `sqrt(min(n_mu, n_nu))`; `0` when the cost is infinite.
    pub std_error: f64,
    pub n_mu: usize,
    pub n_nu: usize,
    /// Same estimator on the first half of each sample list. A large gap to
    /// `cost` signals that the empirical-measure bias has not settled.
    pub half_sample_cost: Option<ExtendedReal>,
}

fn pair_costs(samples_mu: &[Configuration], samples_nu: &[Configuration], metric: Metric) -> Result<CostMatrix> {
    let m = samples_nu.len();
    let entries: Vec<f64> = (0..samples_mu.len() * m)
        .into_par_iter()
        .map(|k| metric.distance(&samples_mu[k / m], &samples_nu[k % m]).to_f64())
        .collect();
    CostMatrix::new(samples_mu.len(), m, entries)
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn solve_uniform(cost: &CostMatrix) -> Result<super::TransportPlan> {
    let (n, m) = (cost.rows(), cost.cols());
    let (mut a, mut b) = (uniform(n), uniform(m));
    // 1/n summed n times can miss 1 by a few ulps; park the residue on one entry.
    a[0] += 1.0 - a.iter().sum::<f64>();
    b[0] += 1.0 - b.iter().sum::<f64>();
    emd(&a, &b, cost)
}

/// Plug-in estimate of the transport cost between the laws that produced
/// `samples_mu` and `samples_nu`.
///
/// The estimator targets the distance between the two empirical measures;
/// it is consistent for the total-variation metric only if configurations
/// from the two lists can share atoms (e.g. coupled draws). Unequal counts
/// under `Rho2` make the cost `+inf`, which is returned, not an error.
pub fn estimate_rubinstein_empirical(
    samples_mu: &[Configuration],
    samples_nu: &[Configuration],
    metric: Metric,
) -> Result<EmpiricalTransport> {
    if samples_mu.is_empty() || samples_nu.is_empty() {
        return Err(Error::InvalidValue(
            "empirical transport needs nonempty sample lists".into(),
        ));
    }
    let cost = pair_costs(samples_mu, samples_nu, metric)?;
    let plan = solve_uniform(&cost)?;
    let (n, m) = (samples_mu.len(), samples_nu.len());
    let std_error = match plan.cost() {
        ExtendedReal::Infinity => 0.0,
        ExtendedReal::Finite(mean) => {
            let mut var = 0.0;
            for i in 0..n {
                for j in 0..m {
                    let w = plan.weight(i, j);
                    if w > 0.0 {
                        var += w * (cost.raw(i, j) - mean).powi(2);
                    }
                }
            }
            (var / n.min(m) as f64).sqrt()
        }
    };
    let half_sample_cost = if n >= 4 && m >= 4 {
        let half = pair_costs(&samples_mu[..n / 2], &samples_nu[..m / 2], metric)?;
        Some(solve_uniform(&half)?.cost())
    } else {
        None
    };
    Ok(EmpiricalTransport {
        cost: plan.cost(),
        std_error,
        n_mu: n,
        n_nu: m,
        half_sample_cost,
    })
}

/// Bootstrap spread of the plug-in transport estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDispersion {
    /// Standard deviation of the replicate costs.
    pub std_dev: f64,
    /// Mean of the replicate costs.
    pub mean: f64,
    pub n_boot: u64,
    pub seed: SeedSpec,
}

/// Normalized multiplicities of `n` indices drawn with replacement from
/// `0..n`, restricted to the drawn indices.
fn resample<R: Rng>(n: usize, rng: &mut R) -> (Vec<usize>, Vec<f64>) {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    let (idx, mut w): (Vec<usize>, Vec<f64>) = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, f64::from(c) / n as f64))
        .unzip();
    w[0] += 1.0 - w.iter().sum::<f64>();
    (idx, w)
}

/// Standard deviation of [`estimate_rubinstein_empirical`] under resampling
/// both lists with replacement, `n_boot` times.
///
/// The pair costs are computed once; each replicate re-solves the transport
/// problem with multiplicity weights. Unlike `EmpiricalTransport::std_error`,
/// which measures the spread of pair costs under the optimal plan, this
/// tracks the fluctuation of the optimal cost itself. Replicate `i` uses
/// `seed.child(i)`.
pub fn bootstrap_dispersion(
    samples_mu: &[Configuration],
    samples_nu: &[Configuration],
    metric: Metric,
    n_boot: u64,
    seed: SeedSpec,
) -> Result<BootstrapDispersion> {
    if samples_mu.is_empty() || samples_nu.is_empty() {
        return Err(Error::InvalidValue("bootstrap needs nonempty sample lists".into()));
    }
    if n_boot < 2 {
        return Err(Error::InvalidValue("bootstrap needs at least two replicates".into()));
    }
    let cost = pair_costs(samples_mu, samples_nu, metric)?;
    let costs = replicate(n_boot, seed, |_, s| {
        let mut rng = s.rng();
        let (rows, a) = resample(cost.rows(), &mut rng);
        let (cols, b) = resample(cost.cols(), &mut rng);
        let sub = CostMatrix::from_fn(rows.len(), cols.len(), |i, j| cost.raw(rows[i], cols[j]))?;
        emd(&a, &b, &sub)?
            .cost()
            .finite()
            .ok_or_else(|| Error::UndefinedInput("bootstrap dispersion of an infinite transport cost".into()))
    })?;
    let e = Estimate::from_samples(&costs, Some(seed));
    Ok(BootstrapDispersion {
        std_dev: e.std_error * (n_boot as f64).sqrt(),
        mean: e.mean,
        n_boot,
        seed,
    })
}

/// Dual estimate `mean F(samples_nu) - mean F(samples_mu)`.
///
/// If `F` is 1-Lipschitz for the ground distance, its expectation is a
/// lower bound on the transport cost. The standard error combines both
/// sample means.
pub fn dual_lower_bound<F: Functional + ?Sized>(
    f: &F,
    samples_mu: &[Configuration],
    samples_nu: &[Configuration],
) -> Result<Estimate> {
    if samples_mu.is_empty() || samples_nu.is_empty() {
        return Err(Error::InvalidValue("dual bound needs nonempty sample lists".into()));
    }
    let eval = |samples: &[Configuration]| -> Result<Estimate> {
        let values: Vec<f64> = samples.par_iter().map(|w| f.eval(w)).collect::<Result<_>>()?;
        Ok(Estimate::from_samples(&values, None))
    };
    let (mu, nu) = (eval(samples_mu)?, eval(samples_nu)?);
    Ok(Estimate {
        mean: nu.mean - mu.mean,
        std_error: (mu.std_error.powi(2) + nu.std_error.powi(2)).sqrt(),
        n_samples: mu.n_samples + nu.n_samples,
        seed: None,
    })
}
