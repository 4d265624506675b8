use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tail::{poisson_pmf, poisson_tail_exact};
use crate::gradient::gradient_draws;
use crate::{Configuration, Error, Estimate, Functional, IntensityMeasure, Result, SeedSpec, Window};

/// Inner points per configuration in the nested surface integrals.
pub const INNER_SAMPLES: u64 = 16;

/// Largest number of half-integer thresholds [`coarea_check`] sums over.
pub const MAX_THRESHOLDS: usize = 10_000;

/// Comparison between a count and a fixed integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountRelation {
    AtMost,
    Exactly,
    AtLeast,
}

/// A set of configurations, used through its indicator.
#[derive(Clone)]
pub enum Event {
    /// Every configuration.
    Whole,
    /// `{omega(region) <relation> k}`; `region = None` is the whole window.
    Count {
        region: Option<Window>,
        relation: CountRelation,
        k: u64,
    },
    /// Any other measurable set.
    Custom {
        label: String,
        indicator: Arc<dyn Fn(&Configuration) -> bool + Send + Sync>,
    },
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Whole => f.write_str("Whole"),
            Event::Count { region, relation, k } => f
                .debug_struct("Count")
                .field("region", region)
                .field("relation", relation)
                .field("k", k)
                .finish(),
            Event::Custom { label, .. } => f.debug_struct("Custom").field("label", label).finish(),
        }
    }
}

impl Event {
    pub fn count(relation: CountRelation, k: u64) -> Self {
        Event::Count {
            region: None,
            relation,
            k,
        }
    }

    pub fn count_in(region: Window, relation: CountRelation, k: u64) -> Self {
        Event::Count {
            region: Some(region),
            relation,
            k,
        }
    }

    pub fn custom<F>(label: impl Into<String>, indicator: F) -> Self
    where
        F: Fn(&Configuration) -> bool + Send + Sync + 'static,
    {
        Event::Custom {
            label: label.into(),
            indicator: Arc::new(indicator),
        }
    }

    pub fn contains(&self, omega: &Configuration) -> bool {
        match self {
            Event::Whole => true,
            Event::Count { region, relation, k } => {
                let n = match region {
                    Some(w) => omega.count_in(w),
                    None => omega.len(),
                } as u64;
                match relation {
                    CountRelation::AtMost => n <= *k,
                    CountRelation::Exactly => n == *k,
                    CountRelation::AtLeast => n >= *k,
                }
            }
            Event::Custom { indicator, .. } => indicator(omega),
        }
    }

    /// Exact `(mu(A), mu(boundary A))` under `Poisson(sigma)`, for events
    /// determined by one count.
    ///
    /// Adding a point outside the region leaves the count unchanged, so the
    /// surface measure is the region mass times the probability that one
    /// more point crosses the threshold.
    pub fn exact(&self, sigma: &IntensityMeasure) -> Result<Option<(f64, f64)>> {
        match self {
            Event::Whole => Ok(Some((1.0, 0.0))),
            Event::Count { region, relation, k } => {
                let m = match region {
                    Some(w) => sigma.mass_in(w)?,
                    None => sigma.total_mass(),
                };
                let k = *k;
                let below = |j: u64| if j == 0 { 0.0 } else { poisson_pmf(m, j - 1) };
                Ok(Some(match relation {
                    CountRelation::AtMost => (1.0 - poisson_tail_exact(m, k + 1), m * poisson_pmf(m, k)),
                    CountRelation::Exactly => (poisson_pmf(m, k), m * (below(k) + poisson_pmf(m, k))),
                    CountRelation::AtLeast => (poisson_tail_exact(m, k), m * below(k)),
                }))
            }
            Event::Custom { .. } => Ok(None),
        }
    }
}

impl Functional for Event {
    fn eval(&self, omega: &Configuration) -> Result<f64> {
        Ok(f64::from(u8::from(self.contains(omega))))
    }
}

/// Surface measure `E integral |grad_sharp_x 1_A| d sigma(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeasure {
    /// Nested Monte Carlo estimate.
    pub estimate: Estimate,
    /// Closed form, for count events.
    pub exact: Option<f64>,
}

/// Nested Monte Carlo estimate of the surface measure of `event`, with the
/// closed form alongside for count events.
///
/// ```
/// use ppt_core::concentration::{surface_measure, CountRelation, Event};
/// use ppt_core::{IntensityMeasure, SeedSpec, Window};
///
/// let sigma = IntensityMeasure::lebesgue(Window::unit(1).unwrap()).unwrap();
/// let empty = Event::count(CountRelation::Exactly, 0);
/// let s = surface_measure(&empty, &sigma, 2000, SeedSpec::new(1, 0)).unwrap();
/// assert!((s.exact.unwrap() - (-1.0f64).exp()).abs() < 1e-15);
/// ```
pub fn surface_measure(
    event: &Event,
    sigma: &IntensityMeasure,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<SurfaceMeasure> {
    let draws = gradient_draws(event, sigma, n_samples, INNER_SAMPLES, seed)?;
    let values: Vec<f64> = draws.iter().map(|d| d.1).collect();
    Ok(SurfaceMeasure {
        estimate: Estimate::from_samples(&values, Some(seed)),
        exact: event.exact(sigma)?.map(|e| e.1),
    })
}

/// Witness ratio `2 mu(boundary A) / (mu(A) (1 - mu(A)))` for one event,
/// with the published two-sided bounds on the isoperimetric constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricRatio {
    /// Monte Carlo ratio, standard error by the delta method.
    pub estimate: Estimate,
    pub probability: Estimate,
    pub surface: Estimate,
    /// Closed form, for count events.
    pub exact: Option<f64>,
    /// `(1, s / (1 - e^{-s}))` from [`isoperimetric_bounds`].
    pub stated_bounds: (f64, f64),
}

/// Isoperimetric witness ratio of `event` under `Poisson(sigma)`.
///
/// Fails with [`Error::DegenerateEvent`] when the estimated (or exact)
/// probability of the event is 0 or 1.
pub fn isoperimetric_ratio(
    event: &Event,
    sigma: &IntensityMeasure,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<IsoperimetricRatio> {
    let draws = gradient_draws(event, sigma, n_samples, INNER_SAMPLES, seed)?;
    let a: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let g: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let probability = Estimate::from_samples(&a, Some(seed));
    let surface = Estimate::from_samples(&g, Some(seed));
    let p = probability.mean;
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::DegenerateEvent(p));
    }
    let exact = match event.exact(sigma)? {
        Some((pa, _)) if pa <= 0.0 || pa >= 1.0 => return Err(Error::DegenerateEvent(pa)),
        Some((pa, sa)) => Some(2.0 * sa / (pa * (1.0 - pa))),
        None => None,
    };
    let q = p * (1.0 - p);
    let ratio = 2.0 * surface.mean / q;
    // Delta method on (mean g, mean a), with their sample covariance.
    let n = draws.len() as f64;
    let cov = if draws.len() > 1 {
        a.iter().zip(&g).map(|(x, y)| (x - p) * (y - surface.mean)).sum::<f64>() / (n - 1.0) / n
    } else {
        0.0
    };
    let d_g = 2.0 / q;
    let d_a = -2.0 * surface.mean * (1.0 - 2.0 * p) / (q * q);
    let var = d_g * d_g * surface.std_error.powi(2) + d_a * d_a * probability.std_error.powi(2) + 2.0 * d_g * d_a * cov;
    Ok(IsoperimetricRatio {
        estimate: Estimate {
            mean: ratio,
            std_error: var.max(0.0).sqrt(),
            n_samples,
            seed: Some(seed),
        },
        probability,
        surface,
        exact,
        stated_bounds: isoperimetric_bounds(sigma.total_mass())?,
    })
}

/// The published bounds `1 <= h <= s / (1 - e^{-s})` on the isoperimetric
/// constant of `Poisson(sigma)` with `s = sigma(Lambda)`.
pub fn isoperimetric_bounds(total_mass: f64) -> Result<(f64, f64)> {
    if !(total_mass.is_finite() && total_mass > 0.0) {
        return Err(Error::UndefinedInput(format!("total mass {total_mass}")));
    }
    Ok((1.0, total_mass / -(-total_mass).exp_m1()))
}

/// The alternative upper bound `8 + 8 sqrt(s)` cited for comparison.
pub fn cited_upper_bound(total_mass: f64) -> f64 {
    8.0 + 8.0 * total_mass.sqrt()
}

/// The witness `A = {omega(Lambda) = 0}` behind the published upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmptyWitness {
    pub total_mass: f64,
    /// `2 mu(boundary A) / (mu(A)(1 - mu(A))) = 2 s / (1 - e^{-s})`.
    pub exact_ratio: f64,
    /// `s / (1 - e^{-s})`, the published upper bound.
    pub stated_upper: f64,
    /// `exact_ratio / stated_upper`.
    pub factor: f64,
    /// The witness ratio exceeds the published bound it is said to attain.
    pub discrepancy: bool,
}

/// Compares the empty-configuration witness ratio with the published upper
/// bound. The witness evaluates to twice the stated value; both are
/// reported and the mismatch is flagged.
pub fn empty_witness(total_mass: f64) -> Result<EmptyWitness> {
    let (_, stated_upper) = isoperimetric_bounds(total_mass)?;
    let p = (-total_mass).exp();
    let exact_ratio = 2.0 * total_mass * p / (p * -(-total_mass).exp_m1());
    let factor = exact_ratio / stated_upper;
    Ok(EmptyWitness {
        total_mass,
        exact_ratio,
        stated_upper,
        factor,
        discrepancy: (factor - 1.0).abs() > 1e-12,
    })
}

/// Two sides of a functional inequality, each a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: Estimate,
    pub rhs: Estimate,
}

impl InequalityCheck {
    fn combined_error(&self) -> f64 {
        self.lhs.std_error.hypot(self.rhs.std_error)
    }

    /// `lhs <= rhs + k * combined standard error`.
    pub fn holds(&self, k: f64) -> bool {
        self.lhs.mean <= self.rhs.mean + k * self.combined_error()
    }

    /// `|lhs - rhs| <= k * combined standard error`, with a relative floor
    /// of `1e-12` for sides that agree pointwise.
    pub fn agrees(&self, k: f64) -> bool {
        let scale = self.lhs.mean.abs().max(self.rhs.mean.abs());
        (self.lhs.mean - self.rhs.mean).abs() <= k * self.combined_error() + 1e-12 * scale
    }
}

/// `lhs = E|F - E F|` against `rhs = 2 E integral |grad_sharp F| d sigma`,
/// the L1 Poincare inequality with constant 1, from the same draws.
pub fn poincare_l1_check<F: Functional + ?Sized>(
    f: &F,
    sigma: &IntensityMeasure,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<InequalityCheck> {
    let draws = gradient_draws(f, sigma, n_samples, INNER_SAMPLES, seed)?;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / draws.len() as f64;
    let dev: Vec<f64> = draws.iter().map(|d| (d.0 - mean).abs()).collect();
    let grad: Vec<f64> = draws.iter().map(|d| 2.0 * d.1).collect();
    Ok(InequalityCheck {
        lhs: Estimate::from_samples(&dev, Some(seed)),
        rhs: Estimate::from_samples(&grad, Some(seed)),
    })
}

fn as_integer(v: f64) -> Result<i64> {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 2f64.powi(53) {
        Ok(v as i64)
    } else {
        Err(Error::NotInteger(v))
    }
}

/// Co-area identity for an integer-valued functional:
/// `lhs = E integral |grad_sharp F| d sigma` and
/// `rhs = E integral sum_t |grad_sharp 1_{F > t}| d sigma` over thresholds
/// `t` at half-integers spanning the observed range.
///
/// Both sides use the same configurations and inner points. A range wider
/// than [`MAX_THRESHOLDS`] is [`Error::RangeTooWide`].
pub fn coarea_check<F: Functional + ?Sized>(
    f: &F,
    sigma: &IntensityMeasure,
    n_samples: u64,
    seed: SeedSpec,
) -> Result<InequalityCheck> {
    if n_samples == 0 {
        return Err(Error::InvalidValue("n_samples must be positive".into()));
    }
    let mass = sigma.total_mass();
    let draws = crate::replicate(n_samples, seed, |_, s| {
        let omega = crate::simulate::sample_poisson(sigma, s.branch(0))?;
        let base = as_integer(f.eval(&omega)?)?;
        let mut rng = s.branch(1).rng();
        let mut plus = Vec::with_capacity(INNER_SAMPLES as usize);
        if mass > 0.0 {
            for _ in 0..INNER_SAMPLES {
                let x = sigma.sample_point(&mut rng)?;
                plus.push(as_integer(f.eval(&omega.with_atom(&x)?)?)?);
            }
        }
        Ok((base, plus))
    })?;
    let (min, max) = draws
        .iter()
        .flat_map(|(b, p)| std::iter::once(b).chain(p))
        .fold((i64::MAX, i64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = (max - min) as u64;
    if span > MAX_THRESHOLDS as u64 {
        return Err(Error::RangeTooWide {
            min,
            max,
            limit: MAX_THRESHOLDS,
        });
    }
    let thresholds: Vec<f64> = (min..max).map(|t| t as f64 + 0.5).collect();
    let scale = if mass > 0.0 { mass / INNER_SAMPLES as f64 } else { 0.0 };
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = draws
        .iter()
        .map(|(b, plus)| {
            let direct: i64 = plus.iter().map(|p| (p - b).abs()).sum();
            let level: usize = plus
                .iter()
                .map(|&p| {
                    thresholds
                        .iter()
                        .filter(|&&t| (p as f64 > t) != (*b as f64 > t))
                        .count()
                })
                .sum();
            (scale * direct as f64, scale * level as f64)
        })
        .unzip();
    Ok(InequalityCheck {
        lhs: Estimate::from_samples(&lhs, Some(seed)),
        rhs: Estimate::from_samples(&rhs, Some(seed)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use std::f64::consts::E;

    fn sigma(mass: f64) -> IntensityMeasure {
        IntensityMeasure::constant(Window::unit(1).unwrap(), mass).unwrap()
    }

    fn half() -> Window {
        Window::interval(0.0, 0.5).unwrap()
    }

    const SEED: SeedSpec = SeedSpec::new(21, 0);

    #[test]
    fn event_membership() {
        let w = Configuration::from_scalars(&[0.1, 0.7]).unwrap();
        assert!(Event::Whole.contains(&w));
        assert!(Event::count(CountRelation::AtMost, 2).contains(&w));
        assert!(!Event::count(CountRelation::Exactly, 1).contains(&w));
        assert!(Event::count_in(half(), CountRelation::Exactly, 1).contains(&w));
        assert!(Event::custom("first left", |w: &Configuration| w.atom(0)[0] < 0.5).contains(&w));
        assert_eq!(
            format!("{:?}", Event::custom("x", |_: &Configuration| true)),
            "Custom { label: \"x\" }"
        );
    }

    #[test]
    fn surface_of_whole_space_is_zero() {
        let s = surface_measure(&Event::Whole, &sigma(1.0), 500, SEED).unwrap();
        assert_eq!(s.estimate.mean, 0.0);
        assert_eq!(s.exact, Some(0.0));
    }

    #[test]
    fn surface_of_empty_event() {
        let s = surface_measure(&Event::count(CountRelation::Exactly, 0), &sigma(1.0), 20_000, SEED).unwrap();
        let want = (-1.0f64).exp();
        assert!((s.exact.unwrap() - want).abs() < 1e-15);
        assert!(s.estimate.within(want, 3.0), "{:?}", s.estimate);
    }

    #[test]
    fn surface_of_count_threshold() {
        let s = surface_measure(&Event::count(CountRelation::AtMost, 2), &sigma(1.0), 20_000, SEED).unwrap();
        let want = (-1.0f64).exp() / 2.0;
        assert!((s.exact.unwrap() - want).abs() < 1e-15);
        assert!(s.estimate.within(want, 3.0), "{:?}", s.estimate);
        // Only points landing in the region move the count.
        let s = surface_measure(
            &Event::count_in(half(), CountRelation::AtLeast, 1),
            &sigma(2.0),
            20_000,
            SEED,
        )
        .unwrap();
        assert!((s.exact.unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert!(s.estimate.within(s.exact.unwrap(), 3.0), "{:?}", s.estimate);
    }

    #[test]
    fn empty_event_ratio_is_exact() {
        let r = isoperimetric_ratio(&Event::count(CountRelation::Exactly, 0), &sigma(1.0), 20_000, SEED).unwrap();
        let want = 2.0 / (1.0 - 1.0 / E);
        assert!((r.exact.unwrap() - want).abs() < 1e-12);
        assert!((want - 3.163_953_4).abs() < 1e-7);
        assert!(r.estimate.within(want, 3.0), "{:?}", r.estimate);
        assert!((r.stated_bounds.1 - 1.0 / (1.0 - 1.0 / E)).abs() < 1e-15);
    }

    #[test]
    fn ratios_respect_lower_bound() {
        let events = [
            Event::count(CountRelation::Exactly, 0),
            Event::count(CountRelation::AtMost, 1),
            Event::count(CountRelation::AtMost, 2),
            Event::count(CountRelation::AtMost, 3),
            Event::count_in(half(), CountRelation::AtLeast, 1),
        ];
        for mass in [0.5, 1.0, 3.0] {
            for event in &events {
                let r = isoperimetric_ratio(event, &sigma(mass), 5_000, SEED).unwrap();
                assert!(r.estimate.mean >= 1.0 - 3.0 * r.estimate.std_error, "{event:?} {r:?}");
                assert!(r.exact.unwrap() >= 1.0, "{event:?} {r:?}");
            }
        }
    }

    #[test]
    fn small_mass_limit() {
        let w = empty_witness(1e-8).unwrap();
        assert!((w.exact_ratio - 2.0).abs() < 1e-7);
        assert!((w.stated_upper - 1.0).abs() < 1e-7);
    }

    #[test]
    fn degenerate_events_are_rejected() {
        assert!(matches!(
            isoperimetric_ratio(&Event::Whole, &sigma(1.0), 100, SEED),
            Err(Error::DegenerateEvent(p)) if p == 1.0
        ));
        let never = Event::custom("never", |_: &Configuration| false);
        assert!(matches!(
            isoperimetric_ratio(&never, &sigma(1.0), 100, SEED),
            Err(Error::DegenerateEvent(_))
        ));
    }

    #[test]
    fn published_bounds() {
        let (lo, hi) = isoperimetric_bounds(1.0).unwrap();
        assert_eq!(lo, 1.0);
        assert!((hi - 1.581_976_7).abs() < 1e-7);
        assert!((isoperimetric_bounds(5.0).unwrap().1 - 5.033_918_3).abs() < 1e-7);
        assert!((isoperimetric_bounds(1e-9).unwrap().1 - 1.0).abs() < 1e-8);
        assert!((cited_upper_bound(5.0) - 25.888_54).abs() < 1e-5);
        assert!(isoperimetric_bounds(0.0).is_err());
        let w = empty_witness(1.0).unwrap();
        assert!(w.discrepancy);
        assert!((w.factor - 2.0).abs() < 1e-15);
    }

    #[test]
    fn poincare_constant_functional() {
        let c = poincare_l1_check(&|_: &Configuration| 4.0, &sigma(1.0), 200, SEED).unwrap();
        assert_eq!((c.lhs.mean, c.rhs.mean), (0.0, 0.0));
    }

    #[test]
    fn poincare_count() {
        let c = poincare_l1_check(&|w: &Configuration| w.len() as f64, &sigma(1.0), 40_000, SEED).unwrap();
        assert!(c.lhs.within(2.0 / E, 4.0), "{:?}", c.lhs);
        assert_eq!(c.rhs.mean, 2.0);
        assert!(c.holds(3.0));
    }

    #[test]
    fn poincare_indicator() {
        let empty = Event::count(CountRelation::Exactly, 0);
        let c = poincare_l1_check(&empty, &sigma(1.0), 40_000, SEED).unwrap();
        let p = 1.0 / E;
        assert!(c.lhs.within(2.0 * p * (1.0 - p), 4.0), "{:?}", c.lhs);
        assert!(c.rhs.within(2.0 * p, 4.0), "{:?}", c.rhs);
        assert!(c.holds(3.0));
    }

    #[test]
    fn poincare_suite() {
        let eta = Configuration::from_scalars(&[0.2, 0.4]).unwrap();
        let s = sigma(2.0);
        let checks = [
            poincare_l1_check(&|w: &Configuration| w.count_in(&half()) as f64, &s, 5_000, SEED).unwrap(),
            poincare_l1_check(&|w: &Configuration| (w.len() as f64).min(2.0), &s, 5_000, SEED).unwrap(),
            poincare_l1_check(&move |w: &Configuration| metrics::rho1(w, &eta) as f64, &s, 5_000, SEED).unwrap(),
            poincare_l1_check(&Event::count(CountRelation::AtLeast, 3), &s, 5_000, SEED).unwrap(),
        ];
        for c in checks {
            assert!(c.holds(3.0), "{c:?}");
        }
    }

    #[test]
    fn coarea_counts() {
        let s = sigma(2.0);
        let k = half();
        let c = coarea_check(&move |w: &Configuration| w.count_in(&k) as f64, &s, 10_000, SEED).unwrap();
        assert!(c.agrees(3.0), "{c:?}");
        assert!(c.lhs.within(1.0, 4.0), "{:?}", c.lhs);
        let c = coarea_check(&|w: &Configuration| (w.len() as f64).min(3.0), &s, 10_000, SEED).unwrap();
        assert!(c.agrees(3.0), "{c:?}");
        let c = coarea_check(&|_: &Configuration| 7.0, &s, 100, SEED).unwrap();
        assert_eq!((c.lhs.mean, c.rhs.mean), (0.0, 0.0));
    }

    #[test]
    fn coarea_rejects_bad_functionals() {
        let s = sigma(1.0);
        assert!(matches!(
            coarea_check(&|w: &Configuration| w.len() as f64 + 0.5, &s, 10, SEED),
            Err(Error::NotInteger(_))
        ));
        assert!(matches!(
            coarea_check(&|w: &Configuration| 1e6 * w.len() as f64, &s, 100, SEED),
            Err(Error::RangeTooWide { .. })
        ));
    }
}
