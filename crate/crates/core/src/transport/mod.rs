//! Exact discrete optimal transport.
//!
//! - [`assignment_solve`]: minimum-cost perfect matching (Hungarian method).
//! - [`emd`]: optimal plan between two probability vectors (network simplex),
//!   with `+inf` costs allowed.
//! - [`estimate_rubinstein_empirical`] and [`dual_lower_bound`]: primal and
//!   dual estimates of the transport cost between two laws on configurations,
//!   from samples; [`bootstrap_dispersion`] for the spread of the primal one.
//! - [`exact_oracle_discrete`]: the exact total-variation transport cost
//!   between two Poisson laws on a partition with at most two cells.

mod assignment;
mod empirical;
mod network_simplex;
mod oracle;

use serde::{Deserialize, Serialize};

pub use assignment::{assignment_solve, Assignment};
pub use empirical::{
    bootstrap_dispersion, dual_lower_bound, estimate_rubinstein_empirical, BootstrapDispersion, EmpiricalTransport,
    Metric,
};
pub use oracle::exact_oracle_discrete;

use crate::{Error, ExtendedReal, Result};

/// Dense `rows x cols` matrix of nonnegative costs; `+inf` marks a
/// forbidden pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Row-major entries. NaN and negative costs are rejected.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|c| !(**c >= 0.0)) {
            return Err(Error::InvalidValue(format!("cost entry {bad}")));
        }
        Ok(CostMatrix { rows, cols, entries })
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(rows: usize, cols: usize, f: F) -> Result<Self> {
        let entries = (0..rows * cols).map(|k| f(k / cols.max(1), k % cols.max(1))).collect();
        CostMatrix::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> ExtendedReal {
        ExtendedReal::from_f64(self.raw(i, j))
    }

    pub(crate) fn raw(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// Finite entries as `(row, col, cost)`, row-major.
    fn finite_arcs(&self) -> Vec<(usize, usize, f64)> {
        let mut arcs = Vec::with_capacity(self.entries.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                let c = self.raw(i, j);
                if c.is_finite() {
                    arcs.push((i, j, c));
                }
            }
        }
        arcs
    }
}

/// A coupling of two probability vectors and its cost.
///
/// Serializes as sparse `[row, col, weight]` triplets of the positive
/// weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PlanJson", try_from = "PlanJson")]
pub struct TransportPlan {
    weights: Vec<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
    cost: ExtendedReal,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.row_marginals.len()
    }

    pub fn cols(&self) -> usize {
        self.col_marginals.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols() + j]
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }

    /// `sum w[i][j] C[i][j]`, with `0 * inf = 0`.
    pub fn cost(&self) -> ExtendedReal {
        self.cost
    }

    /// Largest deviation of the plan's row and column sums from the
    /// marginals.
    pub fn marginal_error(&self) -> f64 {
        let (n, m) = (self.rows(), self.cols());
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let s: f64 = (0..m).map(|j| self.weight(i, j)).sum();
            worst = worst.max((s - self.row_marginals[i]).abs());
        }
        for j in 0..m {
            let s: f64 = (0..n).map(|i| self.weight(i, j)).sum();
            worst = worst.max((s - self.col_marginals[j]).abs());
        }
        worst
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanJson {
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
    entries: Vec<(usize, usize, f64)>,
    cost: ExtendedReal,
}

impl From<TransportPlan> for PlanJson {
    fn from(plan: TransportPlan) -> Self {
        let m = plan.cols();
        let entries = plan
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, w)| (k / m, k % m, *w))
            .collect();
        PlanJson {
            row_marginals: plan.row_marginals,
            col_marginals: plan.col_marginals,
            entries,
            cost: plan.cost,
        }
    }
}

impl TryFrom<PlanJson> for TransportPlan {
    type Error = Error;

    fn try_from(json: PlanJson) -> Result<Self> {
        let (n, m) = (json.row_marginals.len(), json.col_marginals.len());
        let mut weights = vec![0.0; n * m];
        for (i, j, w) in json.entries {
            if i >= n || j >= m || !(w >= 0.0) {
                return Err(Error::InvalidValue(format!("plan entry ({i}, {j}, {w})")));
            }
            weights[i * m + j] = w;
        }
        Ok(TransportPlan {
            weights,
            row_marginals: json.row_marginals,
            col_marginals: json.col_marginals,
            cost: json.cost,
        })
    }
}

/// Tolerance on the total mass of each marginal.
const MASS_TOL: f64 = 1e-12;

fn check_probability(v: &[f64], name: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::MarginalMismatch(format!("{name} is empty")));
    }
    if let Some(bad) = v.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::MarginalMismatch(format!("{name} has weight {bad}")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::MarginalMismatch(format!("{name} sums to {total:e}, not 1")));
    }
    Ok(())
}

/// Optimal transport plan between probability vectors `a` and `b` for the
/// cost matrix `cost`.
///
/// Forbidden (`+inf`) pairs carry no flow. If no plan avoids them the cost
/// is `+inf` and the returned weights are the product coupling.
///
/// ```
/// use ppt_core::transport::{emd, CostMatrix};
///
/// let c = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
/// let plan = emd(&[0.5, 0.5], &[0.25, 0.75], &c).unwrap();
/// assert!((plan.cost().to_f64() - 0.25).abs() < 1e-15);
/// ```
pub fn emd(a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    check_probability(a, "row marginal")?;
    check_probability(b, "column marginal")?;
    if cost.rows() != a.len() || cost.cols() != b.len() {
        return Err(Error::MarginalMismatch(format!(
            "{}x{} cost matrix for marginals of length {} and {}",
            cost.rows(),
            cost.cols(),
            a.len(),
            b.len()
        )));
    }
    let (n, m) = (a.len(), b.len());
    let arcs = cost.finite_arcs();
    let solution = network_simplex::solve(&network_simplex::Problem {
        supply: a,
        demand: b,
        arcs: &arcs,
    })?;
    if !solution.feasible {
        let weights = (0..n * m).map(|k| a[k / m] * b[k % m]).collect();
        return Ok(TransportPlan {
            weights,
            row_marginals: a.to_vec(),
            col_marginals: b.to_vec(),
            cost: ExtendedReal::Infinity,
        });
    }

    // Complementary slackness: every real arc prices nonnegatively and
    // carries flow only at zero reduced cost.
    let max_cost = arcs.iter().map(|a| a.2).fold(0.0, f64::max);
    let tol = 1e-9 * (1.0 + max_cost);
    let pi = &solution.potentials;
    let mut residual: f64 = 0.0;
    for (k, &(i, j, c)) in arcs.iter().enumerate() {
        let rc = c + pi[i] - pi[n + j];
        residual = residual.max(-rc);
        if solution.flows[k] > 0.0 {
            residual = residual.max(rc.abs());
        }
    }
    if residual > tol {
        return Err(Error::Inconsistent(format!(
            "complementary slackness residual {residual:e} exceeds {tol:e}"
        )));
    }

    let mut weights = vec![0.0; n * m];
    let mut total = 0.0;
    for (k, &(i, j, c)) in arcs.iter().enumerate() {
        let w = solution.flows[k].max(0.0);
        weights[i * m + j] = w;
        total += w * c;
    }
    let plan = TransportPlan {
        weights,
        row_marginals: a.to_vec(),
        col_marginals: b.to_vec(),
        cost: ExtendedReal::Finite(total),
    };
    let err = plan.marginal_error();
    if err > MASS_TOL {
        return Err(Error::Inconsistent(format!("plan marginal error {err:e}")));
    }
    Ok(plan)
}
