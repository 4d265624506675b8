use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{poisson_count, sample_poisson};
use crate::{Configuration, Density, Error, IntensityMeasure, Result, SeedSpec};

/// Two configurations drawn jointly, with the transport cost realized by
/// the construction when it provides one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupledPair {
    pub left: Configuration,
    pub right: Configuration,
    pub cost_hint: Option<f64>,
}

/// Coupling of `Poisson(sigma)` and `Poisson(p sigma)` through a common part.
///
/// With `sigma_0 = min(p, 1) sigma`, `sigma_1 = (1 - p)^+ sigma` and
/// `sigma_2 = (p - 1)^+ sigma`, three independent Poisson draws give
/// `left = omega_0 + omega_1` and `right = omega_0 + omega_2`. The
/// total-variation distance between them is `omega_1(Lambda) + omega_2(Lambda)`
/// almost surely, with mean `integral |p - 1| d sigma`.
#[derive(Debug, Clone)]
pub struct SuperpositionCoupling {
    common: IntensityMeasure,
    left_only: IntensityMeasure,
    right_only: IntensityMeasure,
}

impl SuperpositionCoupling {
    pub fn new(sigma: &IntensityMeasure, p: &Density) -> Result<Self> {
        let ps = p.sup();
        let common = sigma.density().product(&p.map(|v| v.min(1.0), ps.min(1.0), "min1")?);
        let left_only = sigma.density().product(&p.map(|v| (1.0 - v).max(0.0), 1.0, "deficit")?);
        let right_only = sigma
            .density()
            .product(&p.map(|v| (v - 1.0).max(0.0), (ps - 1.0).max(0.0), "excess")?);
        let window = sigma.window().clone();
        Ok(SuperpositionCoupling {
            common: IntensityMeasure::new(window.clone(), common)?,
            left_only: IntensityMeasure::new(window.clone(), left_only)?,
            right_only: IntensityMeasure::new(window, right_only)?,
        })
    }

    pub fn common(&self) -> &IntensityMeasure {
        &self.common
    }

    pub fn left_only(&self) -> &IntensityMeasure {
        &self.left_only
    }

    pub fn right_only(&self) -> &IntensityMeasure {
        &self.right_only
    }

    /// `E cost_hint = sigma_1(Lambda) + sigma_2(Lambda)`.
    pub fn expected_cost(&self) -> f64 {
        self.left_only.total_mass() + self.right_only.total_mass()
    }

    pub fn sample(&self, seed: SeedSpec) -> Result<CoupledPair> {
        let omega0 = sample_poisson(&self.common, seed.branch(0))?;
        let omega1 = sample_poisson(&self.left_only, seed.branch(1))?;
        let omega2 = sample_poisson(&self.right_only, seed.branch(2))?;
        let cost = (omega1.len() + omega2.len()) as f64;
        Ok(CoupledPair {
            left: omega0.superpose(&omega1)?,
            right: omega0.superpose(&omega2)?,
            cost_hint: Some(cost),
        })
    }
}

/// One draw of the superposition coupling. Builds the three intensities on
/// every call; use [`SuperpositionCoupling`] for repeated draws.
pub fn sample_coupled_superposition(sigma: &IntensityMeasure, p: &Density, seed: SeedSpec) -> Result<CoupledPair> {
    SuperpositionCoupling::new(sigma, p)?.sample(seed)
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Deterministic time change `v(t) = t + U(t)` on `[0, T]`.
///
/// `U(0) = 0` and `U' > -1`, so `v` is strictly increasing and maps the
/// Poisson process with intensity `(1 + U')` on `[0, T]` to the standard
/// Poisson process on `[0, v(T)]`.
#[derive(Clone)]
pub struct TimeChangeSpec {
    u: Arc<ScalarFn>,
    u_prime: Arc<ScalarFn>,
    horizon: f64,
    label: String,
}

impl fmt::Debug for TimeChangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeChangeSpec")
            .field("label", &self.label)
            .field("horizon", &self.horizon)
            .finish()
    }
}

/// Points of the validation grid on `[0, T]`.
const GRID: usize = 10_000;
/// Absolute bracket width at which `v^{-1}` stops.
const INVERSE_TOL: f64 = 1e-12;
/// Safeguarded Newton steps allowed in `v^{-1}`; bisection alone needs
/// fewer than `log2(T / INVERSE_TOL)`.
const MAX_INVERSE_STEPS: usize = 200;

/// Serializable description of the built-in time changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeChangeKind {
    /// `U = 0`.
    Zero { horizon: f64 },
    /// `U(t) = c t / (1 + t^3)`.
    CubicDecay { c: f64, horizon: f64 },
}

impl TimeChangeSpec {
    pub fn new<U, D>(u: U, u_prime: D, horizon: f64) -> Result<Self>
    where
        U: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidTimeChange(format!("horizon {horizon}")));
        }
        let spec = TimeChangeSpec {
            u: Arc::new(u),
            u_prime: Arc::new(u_prime),
            horizon,
            label: "custom".into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_kind(kind: TimeChangeKind) -> Result<Self> {
        match kind {
            TimeChangeKind::Zero { horizon } => TimeChangeSpec::zero(horizon),
            TimeChangeKind::CubicDecay { c, horizon } => TimeChangeSpec::cubic_decay(c, horizon),
        }
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Ok(TimeChangeSpec::new(|_| 0.0, |_| 0.0, horizon)?.with_label("zero"))
    }

    /// `U(t) = c t / (1 + t^3)`, with `U'(t) = c (1 - 2 t^3) / (1 + t^3)^2`.
    pub fn cubic_decay(c: f64, horizon: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidTimeChange(format!("coefficient {c}")));
        }
        Ok(TimeChangeSpec::new(
            move |t| c * t / (1.0 + t * t * t),
            move |t| {
                let s = 1.0 + t * t * t;
                c * (1.0 - 2.0 * t * t * t) / (s * s)
            },
            horizon,
        )?
        .with_label(format!("cubic_decay:{c:?}")))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn u(&self, t: f64) -> f64 {
        (self.u)(t)
    }

    pub fn u_prime(&self, t: f64) -> f64 {
        (self.u_prime)(t)
    }

    /// `v(t) = t + U(t)`.
    pub fn v(&self, t: f64) -> f64 {
        t + self.u(t)
    }

    /// `v^{-1}(r)` for `r` in `[0, v(T)]`: Newton steps from `t = r`,
    /// falling back to bisection whenever a step leaves the bracket.
    pub fn v_inverse(&self, r: f64) -> Result<f64> {
        let top = self.v(self.horizon);
        if !(0.0..=top).contains(&r) {
            return Err(Error::UndefinedInput(format!("v^-1({r}) outside [0, {top}]")));
        }
        // Invariant: v(lo) <= r <= v(hi).
        let (mut lo, mut hi) = (0.0, self.horizon);
        let mut t = r.clamp(lo, hi);
        for _ in 0..MAX_INVERSE_STEPS {
            let g = self.v(t) - r;
            if g == 0.0 {
                return Ok(t);
            }
            if g < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= INVERSE_TOL {
                break;
            }
            let slope = 1.0 + self.u_prime(t);
            let newton = t - g / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - t).abs() <= INVERSE_TOL * 1e-3 * t.abs().max(1.0) {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let u0 = self.u(0.0);
        if !(u0.abs() <= 1e-12) {
            return Err(Error::InvalidTimeChange(format!("U(0) = {u0}, expected 0")));
        }
        let mut previous = f64::NEG_INFINITY;
        for k in 0..=GRID {
            let t = self.horizon * k as f64 / GRID as f64;
            let d = self.u_prime(t);
            if !(d > -1.0) {
                return Err(Error::InvalidTimeChange(format!("U'({t}) = {d} is not > -1")));
            }
            let v = self.v(t);
            if !(v > previous) {
                return Err(Error::InvalidTimeChange(format!(
                    "v is not strictly increasing at t = {t}"
                )));
            }
            previous = v;
        }
        Ok(())
    }
}

/// Time-change coupling: standard Poisson atoms `r_i` on `[0, v(T)]` on the
/// right, `t_i = v^{-1}(r_i)` on the left.
///
/// The left configuration is the Poisson process with intensity `1 + U'`
/// on `[0, T]`. Atoms are sorted, and `cost_hint` is the cost
/// `sqrt(sum (r_i - t_i)^2)` of the identity pairing.
pub fn sample_coupled_timechange(tc: &TimeChangeSpec, seed: SeedSpec) -> Result<CoupledPair> {
    let mut rng = seed.rng();
    let top = tc.v(tc.horizon());
    let n = poisson_count(top, &mut rng)?;
    let mut right: Vec<f64> = (0..n).map(|_| top * rng.random::<f64>()).collect();
    right.sort_by(f64::total_cmp);
    let left = right.iter().map(|&r| tc.v_inverse(r)).collect::<Result<Vec<_>>>()?;
    let cost = left
        .iter()
        .zip(&right)
        .map(|(t, r)| (r - t).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(CoupledPair {
        left: Configuration::from_scalars(&left)?,
        right: Configuration::from_scalars(&right)?,
        cost_hint: Some(cost),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{metrics, replicate, Estimate, Window};

    #[test]
    fn identity_density_couples_equal_configurations() {
        let sigma = IntensityMeasure::constant(Window::unit(2).unwrap(), 3.0).unwrap();
        let p = Density::constant(1.0).unwrap();
        for i in 0..20 {
            let pair = sample_coupled_superposition(&sigma, &p, SeedSpec::new(i, 0)).unwrap();
            assert!(pair.left.multiset_eq(&pair.right));
            assert_eq!(pair.cost_hint, Some(0.0));
        }
    }

    #[test]
    fn superposition_cost_is_rho1() {
        let sigma = IntensityMeasure::lebesgue(Window::unit(1).unwrap()).unwrap();
        let p = Density::new(|x| 2.0 * x[0], 2.0).unwrap();
        let coupling = SuperpositionCoupling::new(&sigma, &p).unwrap();
        // int_0^1 |2x - 1| dx = 1/2.
        assert!((coupling.expected_cost() - 0.5).abs() < 1e-8);
        for i in 0..200 {
            let pair = coupling.sample(SeedSpec::new(i, 1)).unwrap();
            assert_eq!(pair.cost_hint, Some(metrics::rho1(&pair.left, &pair.right) as f64));
        }
    }

    #[test]
    fn superposition_means() {
        let sigma = IntensityMeasure::lebesgue(Window::unit(1).unwrap()).unwrap();
        let p = Density::constant(2.0).unwrap();
        let coupling = SuperpositionCoupling::new(&sigma, &p).unwrap();
        let n = 100_000;
        let draws = replicate(n, SeedSpec::new(31, 0), |_, s| {
            let pair = coupling.sample(s)?;
            Ok((pair.left.len() as f64, pair.right.len() as f64, pair.cost_hint.unwrap()))
        })
        .unwrap();
        let left = Estimate::from_samples(&draws.iter().map(|d| d.0).collect::<Vec<_>>(), None);
        let right = Estimate::from_samples(&draws.iter().map(|d| d.1).collect::<Vec<_>>(), None);
        let cost = Estimate::from_samples(&draws.iter().map(|d| d.2).collect::<Vec<_>>(), None);
        assert!(left.within(1.0, 3.0), "{left:?}");
        assert!(right.within(2.0, 3.0), "{right:?}");
        assert!(cost.within(1.0, 3.0), "{cost:?}");
    }

    #[test]
    fn cubic_decay_is_valid_and_inverts() {
        let tc = TimeChangeSpec::cubic_decay(1.0, 20.0).unwrap();
        for r in [0.0, 0.3, 1.0, 5.5, tc.v(20.0)] {
            let t = tc.v_inverse(r).unwrap();
            assert!((tc.v(t) - r).abs() < 1e-11);
        }
        assert!(tc.v_inverse(-0.1).is_err());
    }

    #[test]
    fn invalid_time_changes() {
        assert!(matches!(
            TimeChangeSpec::cubic_decay(-3.0, 10.0),
            Err(Error::InvalidTimeChange(_))
        ));
        assert!(TimeChangeSpec::new(|t| t + 1.0, |_| 1.0, 1.0).is_err());
        assert!(TimeChangeSpec::zero(0.0).is_err());
    }

    #[test]
    fn zero_time_change_couples_equal_configurations() {
        let tc = TimeChangeSpec::zero(5.0).unwrap();
        let pair = sample_coupled_timechange(&tc, SeedSpec::new(2, 0)).unwrap();
        assert_eq!(pair.cost_hint, Some(0.0));
        assert!(pair.left.multiset_eq(&pair.right));
    }

    #[test]
    fn timechange_cost_dominates_rho2_and_preserves_order() {
        let tc = TimeChangeSpec::cubic_decay(1.0, 10.0).unwrap();
        for i in 0..100 {
            let pair = sample_coupled_timechange(&tc, SeedSpec::new(i, 0)).unwrap();
            let left: Vec<f64> = pair.left.atoms().map(|x| x[0]).collect();
            assert!(left.windows(2).all(|w| w[0] <= w[1]));
            let rho2 = metrics::rho2(&pair.left, &pair.right).to_f64();
            let hint = pair.cost_hint.unwrap();
            assert!(rho2 <= hint * (1.0 + 1e-12) + 1e-15, "{rho2} > {hint}");
        }
    }
}
