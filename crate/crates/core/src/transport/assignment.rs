use super::CostMatrix;
use crate::{Error, Result};

/// An optimal perfect matching: row `i` goes to column `permutation[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    /// `sum_i C[i][permutation[i]]`, summed in row order.
    pub cost: f64,
}

/// Minimum-cost perfect matching on a square matrix of finite costs
/// (Hungarian method with row/column potentials, `O(n^3)`).
pub fn assignment_solve(cost: &CostMatrix) -> Result<Assignment> {
    let (n, m) = (cost.rows(), cost.cols());
    if n != m {
        return Err(Error::NotSquare { rows: n, cols: m });
    }
    for i in 0..n {
        for j in 0..n {
            if !cost.raw(i, j).is_finite() {
                return Err(Error::InfiniteCost { row: i, col: j });
            }
        }
    }
    if n == 0 {
        return Ok(Assignment {
            permutation: Vec::new(),
            cost: 0.0,
        });
    }
    // 1-based potentials; column 0 is a virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.raw(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0; n];
    for j in 1..=n {
        permutation[row_of[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost.raw(i, permutation[i])).sum();
    Ok(Assignment {
        permutation,
        cost: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    pub(crate) fn brute_force(cost: &CostMatrix) -> f64 {
        let n = cost.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        // Heap's algorithm over all n! permutations.
        fn visit(k: usize, perm: &mut Vec<usize>, cost: &CostMatrix, best: &mut f64) {
            if k <= 1 {
                let total: f64 = (0..perm.len()).map(|i| cost.raw(i, perm[i])).sum();
                *best = best.min(total);
                return;
            }
            for i in 0..k {
                visit(k - 1, perm, cost, best);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        visit(n, &mut perm, cost, &mut best);
        best
    }

    #[test]
    fn single_entry() {
        let c = CostMatrix::new(1, 1, vec![3.5]).unwrap();
        let a = assignment_solve(&c).unwrap();
        assert_eq!(a.permutation, vec![0]);
        assert_eq!(a.cost, 3.5);
    }

    #[test]
    fn ties_return_the_optimal_cost() {
        // Identity and swap both cost 2.
        let c = CostMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(assignment_solve(&c).unwrap().cost, 2.0);
        let c = CostMatrix::new(3, 3, vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]).unwrap();
        assert_eq!(assignment_solve(&c).unwrap().cost, 0.0);
    }

    #[test]
    fn errors() {
        let c = CostMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(assignment_solve(&c), Err(Error::NotSquare { .. })));
        let c = CostMatrix::new(2, 2, vec![1.0, f64::INFINITY, 0.0, 1.0]).unwrap();
        assert!(matches!(
            assignment_solve(&c),
            Err(Error::InfiniteCost { row: 0, col: 1 })
        ));
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = crate::SeedSpec::new(99, 0).rng();
        for _ in 0..300 {
            let n = rng.random_range(1..=6);
            let entries: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * 10.0).collect();
            let c = CostMatrix::new(n, n, entries).unwrap();
            assert_eq!(assignment_solve(&c).unwrap().cost, brute_force(&c));
        }
    }
}
