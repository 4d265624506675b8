use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

use super::{emd, CostMatrix};
use crate::{Error, Result};

/// Largest Poisson mass that may fall beyond the truncation.
const TAIL_LIMIT: f64 = 1e-10;
/// States below this probability are dropped before solving.
const STATE_FLOOR: f64 = 1e-15;

fn cell_pmf(mass: f64, truncation: usize) -> Result<(Vec<f64>, f64)> {
    if !(mass.is_finite() && mass >= 0.0) {
        return Err(Error::InvalidValue(format!("cell mass {mass}")));
    }
    if mass == 0.0 {
        return Ok((vec![1.0], 0.0));
    }
    let law = Poisson::new(mass).map_err(|e| Error::InvalidValue(e.to_string()))?;
    let pmf = (0..=truncation as u64).map(|k| law.pmf(k)).collect();
    Ok((pmf, law.sf(truncation as u64)))
}

/// Count vectors of a product-Poisson law with their probabilities, pruned
/// below [`STATE_FLOOR`] and renormalized.
fn product_law(masses: &[f64], truncation: usize) -> Result<Vec<(Vec<u64>, f64)>> {
    let mut states: Vec<(Vec<u64>, f64)> = vec![(Vec::new(), 1.0)];
    let mut inside = 1.0;
    for &mass in masses {
        let (pmf, tail) = cell_pmf(mass, truncation)?;
        inside *= 1.0 - tail;
        let mut next = Vec::with_capacity(states.len() * pmf.len());
        for (counts, p) in &states {
            for (k, q) in pmf.iter().enumerate() {
                let mut c = counts.clone();
                c.push(k as u64);
                next.push((c, p * q));
            }
        }
        states = next;
    }
    let discarded = 1.0 - inside;
    if discarded >= TAIL_LIMIT {
        return Err(Error::TruncationTooSmall {
            truncation,
            discarded,
            limit: TAIL_LIMIT,
        });
    }
    states.retain(|(_, p)| *p >= STATE_FLOOR);
    let total: f64 = states.iter().map(|s| s.1).sum();
    for s in &mut states {
        s.1 /= total;
    }
    let residue = 1.0 - states.iter().map(|s| s.1).sum::<f64>();
    let top = (0..states.len())
        .max_by(|&i, &j| states[i].1.total_cmp(&states[j].1))
        .expect("nonempty");
    states[top].1 += residue;
    Ok(states)
}

/// Exact total-variation transport cost between the Poisson laws with the
/// given cell masses, on a partition of at most two cells.
///
/// On a partition, a configuration is summarized by its count vector and
/// the total-variation distance becomes the L1 distance between counts.
/// Count vectors are enumerated up to `truncation` per cell and the full
/// transportation problem is solved exactly.
///
/// ```
/// use ppt_core::transport::exact_oracle_discrete;
///
/// let t = exact_oracle_discrete(&[1.0], &[2.0], 60).unwrap();
/// assert!((t - 1.0).abs() < 1e-8);
/// ```
pub fn exact_oracle_discrete(cell_masses_mu: &[f64], cell_masses_nu: &[f64], truncation: usize) -> Result<f64> {
    if cell_masses_mu.len() != cell_masses_nu.len() {
        return Err(Error::DimensionMismatch {
            expected: cell_masses_mu.len(),
            got: cell_masses_nu.len(),
        });
    }
    if cell_masses_mu.is_empty() || cell_masses_mu.len() > 2 {
        return Err(Error::Unsupported(format!(
            "exact oracle handles 1 or 2 cells, got {}",
            cell_masses_mu.len()
        )));
    }
    let mu = product_law(cell_masses_mu, truncation)?;
    let nu = product_law(cell_masses_nu, truncation)?;
    let cost = CostMatrix::from_fn(mu.len(), nu.len(), |i, j| {
        mu[i].0.iter().zip(&nu[j].0).map(|(a, b)| a.abs_diff(*b) as f64).sum()
    })?;
    let a: Vec<f64> = mu.iter().map(|s| s.1).collect();
    let b: Vec<f64> = nu.iter().map(|s| s.1).collect();
    Ok(emd(&a, &b, &cost)?.cost().to_f64())
}
