use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::quadrature::{integrate, DEFAULT_REL_TOL};
use crate::{Error, Result, Window};

type DensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A bounded nonnegative function on `R^d` with a known upper bound.
///
/// The bound is the rejection envelope for samplers; it is trusted but each
/// evaluation made while sampling is checked against it.
#[derive(Clone)]
pub struct Density {
    f: Arc<DensityFn>,
    sup: f64,
    label: String,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("sup", &self.sup)
            .finish()
    }
}

impl Density {
    pub fn new<F>(f: F, sup: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(sup.is_finite() && sup >= 0.0) {
            return Err(Error::InvalidValue(format!("density supremum {sup}")));
        }
        Ok(Density {
            f: Arc::new(f),
            sup,
            label: "custom".into(),
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidValue(format!("constant density {c}")));
        }
        let mut d = Density::new(move |_| c, c)?;
        d.label = format!("const:{c:?}");
        Ok(d)
    }

    /// Attaches a description used in reproducibility digests.
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// Pointwise product, with the product of the bounds.
    pub fn product(&self, other: &Density) -> Density {
        let (a, b) = (self.f.clone(), other.f.clone());
        Density {
            f: Arc::new(move |x| a(x) * b(x)),
            sup: self.sup * other.sup,
            label: format!("({})*({})", self.label, other.label),
        }
    }

    /// `x -> g(self(x))` with a caller-supplied bound on the result.
    pub fn map<G>(&self, g: G, sup: f64, label: &str) -> Result<Density>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let a = self.f.clone();
        Ok(Density::new(move |x| g(a(x)), sup)?.with_label(format!("{label}({})", self.label)))
    }
}

/// A diffuse finite measure `sigma(dx) = density(x) dx` on a window.
#[derive(Clone, Debug)]
pub struct IntensityMeasure {
    window: Window,
    density: Density,
    total_mass: f64,
}

impl IntensityMeasure {
    /// Computes the total mass by quadrature (relative error 1e-8).
    pub fn new(window: Window, density: Density) -> Result<Self> {
        let total_mass = integrate(|x| density.eval(x), &window, DEFAULT_REL_TOL)?.value;
        if !(total_mass.is_finite() && total_mass >= -1e-12 * window.volume() * density.sup()) {
            return Err(Error::InvalidValue(format!("total mass {total_mass}")));
        }
        Ok(IntensityMeasure {
            window,
            density,
            total_mass: total_mass.max(0.0),
        })
    }

    /// Lebesgue measure on the window.
    pub fn lebesgue(window: Window) -> Result<Self> {
        IntensityMeasure::constant(window, 1.0)
    }

    /// Constant density `c`; the mass is exact.
    pub fn constant(window: Window, c: f64) -> Result<Self> {
        let total_mass = c * window.volume();
        Ok(IntensityMeasure {
            density: Density::constant(c)?,
            window,
            total_mass,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// `sigma(Lambda)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `c * sigma`, mass recomputed by quadrature.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidValue(format!("scale factor {c}")));
        }
        let base = self.density.clone();
        let density = Density::new(move |x| c * base.eval(x), c * self.density.sup())?
            .with_label(format!("{c:?}*({})", self.density.label()));
        IntensityMeasure::new(self.window.clone(), density)
    }

    /// `p * sigma` for a bounded density `p` relative to `sigma`.
    pub fn reweighted(&self, p: &Density) -> Result<Self> {
        IntensityMeasure::new(self.window.clone(), self.density.product(p))
    }

    /// `sigma(K)` for a sub-box `K`; zero when `K` misses the window.
    pub fn mass_in(&self, region: &Window) -> Result<f64> {
        match self.window.intersect(region) {
            None => Ok(0.0),
            Some(k) if k == self.window => Ok(self.total_mass),
            Some(k) => Ok(integrate(|x| self.density.eval(x), &k, DEFAULT_REL_TOL)?.value.max(0.0)),
        }
    }

    /// `integral f d sigma` over the window.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<f64> {
        Ok(integrate(|x| f(x) * self.density.eval(x), &self.window, DEFAULT_REL_TOL)?.value)
    }

    /// One point from `sigma / sigma(Lambda)` by rejection against the
    /// constant envelope `density.sup()`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        const MAX_TRIES: u64 = 100_000_000;
        if self.total_mass <= 0.0 || self.density.sup() <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let sup = self.density.sup();
        let d = self.dim();
        for _ in 0..MAX_TRIES {
            let mut x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            self.window.scale_from_unit(&mut x);
            let value = self.density.eval(&x);
            if !(value >= 0.0) {
                return Err(Error::InvalidValue(format!("density {value} at {x:?}")));
            }
            if value > sup * (1.0 + 1e-12) {
                return Err(Error::EnvelopeViolation { point: x, value, sup });
            }
            if rng.random::<f64>() * sup < value {
                return Ok(x);
            }
        }
        Err(Error::RejectionTooHard {
            proposals: MAX_TRIES,
            accepted: 0,
            floor: 1.0 / MAX_TRIES as f64,
        })
    }
}
