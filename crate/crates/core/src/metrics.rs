//! Distances between two configurations.
//!
//! `rho0` is the trivial distance, `rho1` counts unmatched atoms in both
//! directions, and `rho2` is the optimal-matching (Wasserstein) distance,
//! infinite when the atom counts differ. The normalized variants compare the
//! configurations as probability measures; `rho1_normalized` is *not* lower
//! semicontinuous for vague convergence, which the tests pin down with an
//! explicit sequence.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::configuration::lex_cmp;
use crate::transport::{assignment_solve, CostMatrix};
use crate::{sym_diff_count, Configuration, Error, Result};

/// A nonnegative real or `+infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    /// Maps `f64::INFINITY` to [`ExtendedReal::Infinity`].
    ///
    /// # Panics
    /// On NaN or negative input.
    pub fn from_f64(v: f64) -> Self {
        assert!(v >= 0.0, "extended reals are nonnegative, got {v}");
        if v.is_infinite() {
            ExtendedReal::Infinity
        } else {
            ExtendedReal::Finite(v)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedReal::Infinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(*v),
            ExtendedReal::Infinity => None,
        }
    }

    /// The value as `f64`, with `f64::INFINITY` for infinity.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// `w * self` for `w >= 0`, with `0 * inf = 0`.
    pub fn scale(&self, w: f64) -> ExtendedReal {
        match self {
            _ if w == 0.0 => ExtendedReal::ZERO,
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v * w),
            ExtendedReal::Infinity => ExtendedReal::Infinity,
        }
    }

    pub fn sqrt(&self) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v.sqrt()),
            ExtendedReal::Infinity => ExtendedReal::Infinity,
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::Infinity,
        }
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_f64().total_cmp(&other.to_f64())
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        ExtendedReal::from_f64(v)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinity => f.write_str("inf"),
        }
    }
}

/// Finite values serialize as JSON numbers, infinity as the string `"inf"`.
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) if v >= 0.0 && v.is_finite() => Ok(ExtendedReal::Finite(v)),
            Raw::Text(s) if s == "inf" => Ok(ExtendedReal::Infinity),
            _ => Err(serde::de::Error::custom("expected a nonnegative number or \"inf\"")),
        }
    }
}

/// Trivial distance: 0 for equal multisets, 1 otherwise.
pub fn rho0(omega: &Configuration, eta: &Configuration) -> u8 {
    u8::from(!omega.multiset_eq(eta))
}

/// Total-variation distance `(omega \ eta)(Lambda) + (eta \ omega)(Lambda)`.
pub fn rho1(omega: &Configuration, eta: &Configuration) -> usize {
    sym_diff_count(omega, eta) + sym_diff_count(eta, omega)
}

/// Wasserstein distance: square root of the optimal matching cost under
/// squared Euclidean ground cost; infinite when the counts differ.
pub fn rho2(omega: &Configuration, eta: &Configuration) -> ExtendedReal {
    if omega.len() != eta.len() {
        return ExtendedReal::Infinity;
    }
    if omega.is_empty() {
        return ExtendedReal::ZERO;
    }
    assert!(
        omega.dim() == eta.dim(),
        "rho2 between configurations of dimensions {} and {}",
        omega.dim(),
        eta.dim()
    );
    let n = omega.len();
    let mut entries = Vec::with_capacity(n * n);
    for x in omega.atoms() {
        for y in eta.atoms() {
            entries.push(squared_distance(x, y));
        }
    }
    let cost = CostMatrix::new(n, n, entries).expect("squared distances are finite and nonnegative");
    let solution = assignment_solve(&cost).expect("square finite matrix");
    ExtendedReal::Finite(solution.cost.sqrt())
}

pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Total variation between `omega / omega(Lambda)` and `eta / eta(Lambda)`.
///
/// Atoms present in both configurations contribute the difference of their
/// normalized masses.
pub fn rho1_normalized(omega: &Configuration, eta: &Configuration) -> Result<f64> {
    if omega.is_empty() || eta.is_empty() {
        return Err(Error::UndefinedInput(
            "normalized total variation needs two nonempty configurations".into(),
        ));
    }
    let a = grouped(omega);
    let b = grouped(eta);
    let (wa, wb) = (1.0 / omega.len() as f64, 1.0 / eta.len() as f64);
    let (mut i, mut j, mut total) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => lex_cmp(x.0, y.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                total += a[i].1 as f64 * wa;
                i += 1;
            }
            Ordering::Greater => {
                total += b[j].1 as f64 * wb;
                j += 1;
            }
            Ordering::Equal => {
                total += (a[i].1 as f64 * wa - b[j].1 as f64 * wb).abs();
                i += 1;
                j += 1;
            }
        }
    }
    Ok(total)
}

fn grouped(omega: &Configuration) -> Vec<(&[f64], usize)> {
    let mut out: Vec<(&[f64], usize)> = Vec::new();
    for x in omega.sorted_atoms() {
        match out.last_mut() {
            Some((y, k)) if lex_cmp(x, y).is_eq() => *k += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// `rho2 / omega(Lambda)` for equal nonzero counts, `|omega(Lambda) - eta(Lambda)|`
/// otherwise.
pub fn rho2_normalized(omega: &Configuration, eta: &Configuration) -> f64 {
    let (n, m) = (omega.len(), eta.len());
    if n == m && n != 0 {
        rho2(omega, eta).to_f64() / n as f64
    } else {
        n.abs_diff(m) as f64
    }
}

/// Wasserstein distance between marked configurations on `[0, T] x Lambda`.
///
/// Coordinate 0 of each atom is the time mark; the ground cost is
/// `|t - s|^2 + |x - y|^2`, so this is [`rho2`] in dimension `d + 1`.
pub fn rho2_marked(omega: &Configuration, eta: &Configuration) -> Result<ExtendedReal> {
    for c in [omega, eta] {
        if !c.is_empty() && c.dim() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: c.dim(),
            });
        }
    }
    omega.check_compatible(eta)?;
    Ok(rho2(omega, eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Window;
    use proptest::prelude::*;

    fn c(atoms: &[f64]) -> Configuration {
        Configuration::from_scalars(atoms).unwrap()
    }

    #[test]
    fn rho0_examples() {
        assert_eq!(rho0(&c(&[0.2, 0.4]), &c(&[0.2, 0.4])), 0);
        assert_eq!(rho0(&c(&[]), &c(&[0.2])), 1);
        assert_eq!(rho0(&c(&[0.1, 0.9, 0.5]), &c(&[0.5, 0.1, 0.9])), 0);
    }

    #[test]
    fn rho1_examples() {
        assert_eq!(rho1(&c(&[0.3]), &c(&[0.3])), 0);
        assert_eq!(rho1(&c(&[0.1]), &c(&[0.2])), 2);
        assert_eq!(rho1(&c(&[0.0, 0.5]), &c(&[0.5, 1.0, 2.0])), 3);
    }

    #[test]
    fn rho2_examples() {
        assert_eq!(rho2(&c(&[0.4, 0.1]), &c(&[0.1, 0.4])), ExtendedReal::ZERO);
        assert_eq!(rho2(&c(&[0.0]), &c(&[0.0, 1.0])), ExtendedReal::Infinity);
        // Brute force: identity 0.2^2 + 0.1^2 = 0.05, swap 1.1^2 + 0.8^2 = 1.85.
        let d = rho2(&c(&[0.0, 1.0]), &c(&[0.2, 1.1])).finite().unwrap();
        assert!((d - 0.05f64.sqrt()).abs() < 1e-15);
        assert_eq!(rho2(&c(&[]), &c(&[])), ExtendedReal::ZERO);
    }

    #[test]
    fn normalized_examples() {
        assert_eq!(rho1_normalized(&c(&[0.0]), &c(&[1.0])).unwrap(), 2.0);
        for n in 2..20 {
            let n = n as f64;
            assert_eq!(rho1_normalized(&c(&[0.0, n]), &c(&[1.0, n])).unwrap(), 1.0);
        }
        assert_eq!(rho1_normalized(&c(&[0.3, 0.6]), &c(&[0.6, 0.3])).unwrap(), 0.0);
        // Shared atom with different weights: |1/2 - 1/3| plus the rest.
        let v = rho1_normalized(&c(&[0.0, 1.0]), &c(&[0.0, 2.0, 3.0])).unwrap();
        assert!((v - (1.0 / 6.0 + 0.5 + 2.0 / 3.0)).abs() < 1e-15);
        assert!(rho1_normalized(&c(&[]), &c(&[1.0])).is_err());

        assert_eq!(rho2_normalized(&c(&[0.0]), &c(&[1.0])), 1.0);
        assert_eq!(rho2_normalized(&c(&[0.0]), &c(&[0.0, 1.0])), 1.0);
        assert_eq!(rho2_normalized(&c(&[]), &c(&[])), 0.0);
    }

    #[test]
    fn marked_examples() {
        let a = Configuration::from_points(2, &[[1.0, 0.0], [3.0, 0.5]]).unwrap();
        assert_eq!(rho2_marked(&a, &a).unwrap(), ExtendedReal::ZERO);
        let b = Configuration::from_points(2, &[[1.0, 0.0]]).unwrap();
        assert_eq!(rho2_marked(&a, &b).unwrap(), ExtendedReal::Infinity);
        let t1 = Configuration::from_points(2, &[[1.0, 0.0]]).unwrap();
        let t2 = Configuration::from_points(2, &[[2.0, 0.0]]).unwrap();
        assert_eq!(rho2_marked(&t1, &t2).unwrap(), ExtendedReal::Finite(1.0));
        assert!(rho2_marked(&c(&[1.0]), &c(&[2.0])).is_err());
    }

    #[test]
    fn rho0_le_1_le_rho1_for_distinct() {
        let pairs = [
            (c(&[0.1]), c(&[])),
            (c(&[0.1, 0.2]), c(&[0.2, 0.3])),
            (c(&[0.5]), c(&[0.5, 0.5])),
        ];
        for (a, b) in pairs {
            assert_eq!(rho0(&a, &b), 1);
            assert!(rho1(&a, &b) >= 1);
        }
    }

    #[test]
    fn semicontinuity_witness() {
        // omega_n = {0, n} -> {0} and eta_n = {1, n} -> {1} vaguely.
        let k = Window::interval(-0.5, 1.5).unwrap();
        let (omega, eta) = (c(&[0.0]), c(&[1.0]));
        let limit = rho1(&omega.restrict(&k), &eta.restrict(&k));
        let tail: Vec<usize> = (2..50)
            .map(|n| {
                let n = n as f64;
                rho1(&c(&[0.0, n]).restrict(&k), &c(&[1.0, n]).restrict(&k))
            })
            .collect();
        let liminf = *tail[tail.len() / 2..].iter().min().unwrap();
        assert!(liminf >= limit);
        // The normalized distance drops from 2 to 1 along the same sequence.
        assert_eq!(rho1_normalized(&omega, &eta).unwrap(), 2.0);
        assert_eq!(rho1_normalized(&c(&[0.0, 7.0]), &c(&[1.0, 7.0])).unwrap(), 1.0);
    }

    #[test]
    fn extended_real_ops() {
        let one = ExtendedReal::Finite(1.0);
        assert_eq!(one + ExtendedReal::Infinity, ExtendedReal::Infinity);
        assert!(one < ExtendedReal::Infinity);
        assert_eq!(ExtendedReal::Infinity.scale(0.0), ExtendedReal::ZERO);
        assert_eq!(serde_json::to_string(&ExtendedReal::Infinity).unwrap(), "\"inf\"");
        let back: ExtendedReal = serde_json::from_str("2.5").unwrap();
        assert_eq!(back, ExtendedReal::Finite(2.5));
        assert!(serde_json::from_str::<ExtendedReal>("-1").is_err());
    }

    fn small_config(dim: usize, max: usize) -> impl Strategy<Value = Configuration> {
        // Coordinates on a coarse grid so that atoms coincide often.
        proptest::collection::vec(proptest::collection::vec(0u8..4, dim), 0..max).prop_map(move |atoms| {
            let flat: Vec<f64> = atoms.into_iter().flatten().map(|v| f64::from(v) * 0.25).collect();
            Configuration::from_flat(dim, flat).unwrap()
        })
    }

    fn brute_rho2(a: &Configuration, b: &Configuration) -> f64 {
        fn perms(k: usize, used: &mut Vec<bool>, acc: f64, a: &Configuration, b: &Configuration, best: &mut f64) {
            if k == a.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    perms(k + 1, used, acc + squared_distance(a.atom(k), b.atom(j)), a, b, best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        perms(0, &mut vec![false; b.len()], 0.0, a, b, &mut best);
        best.sqrt()
    }

    proptest! {
        #[test]
        fn metric_axioms(a in small_config(1, 5), b in small_config(1, 5), e in small_config(1, 5)) {
            // symmetry and identity
            prop_assert_eq!(rho0(&a, &b), rho0(&b, &a));
            prop_assert_eq!(rho1(&a, &b), rho1(&b, &a));
            prop_assert_eq!(rho2(&a, &b), rho2(&b, &a));
            prop_assert_eq!(rho1(&a, &b) == 0, a.multiset_eq(&b));
            prop_assert_eq!(rho2(&a, &a), ExtendedReal::ZERO);
            // triangle inequalities
            prop_assert!(rho0(&a, &b) <= rho0(&a, &e) + rho0(&e, &b));
            prop_assert!(rho1(&a, &b) <= rho1(&a, &e) + rho1(&e, &b));
            let lhs = rho2(&a, &b);
            let rhs = rho2(&a, &e) + rho2(&e, &b);
            if !(lhs.is_infinite() && rhs.is_infinite()) {
                prop_assert!(lhs.to_f64() <= rhs.to_f64() + 1e-12);
            }
        }

        #[test]
        fn rho2_matches_brute_force(
            pts in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 1..7),
            dim in 1usize..3,
        ) {
            let n = pts.len();
            let a = Configuration::from_flat(dim, pts.iter().flat_map(|p| p[..dim].to_vec()).collect()).unwrap();
            let b = Configuration::from_flat(dim, pts.iter().flat_map(|p| p[2..2 + dim].to_vec()).collect()).unwrap();
            prop_assert_eq!(a.len(), n);
            let fast = rho2(&a, &b).finite().unwrap();
            prop_assert!((fast - brute_rho2(&a, &b)).abs() <= 1e-12);
        }
    }
}
