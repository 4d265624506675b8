use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned bounded box `[lower[0], upper[0]] x ... x [lower[d-1], upper[d-1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow", into = "RawWindow")]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawWindow> for Window {
    type Error = Error;
    fn try_from(raw: RawWindow) -> Result<Self> {
        Window::new(raw.lower, raw.upper)
    }
}

impl From<Window> for RawWindow {
    fn from(w: Window) -> Self {
        RawWindow {
            lower: w.lower,
            upper: w.upper,
        }
    }
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidWindow("dimension must be at least 1".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidWindow(format!(
                    "side {i} is [{lo}, {hi}]; need finite lower < upper"
                )));
            }
        }
        Ok(Window { lower, upper })
    }

    /// The one-dimensional interval `[a, b]`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Window::new(vec![a], vec![b])
    }

    /// `[0, 1]^d`.
    pub fn unit(d: usize) -> Result<Self> {
        Window::new(vec![0.0; d], vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).product()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Intersection with another box of the same dimension, `None` if empty
    /// or degenerate.
    pub fn intersect(&self, other: &Window) -> Option<Window> {
        if self.dim() != other.dim() {
            return None;
        }
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        Window::new(lower, upper).ok()
    }

    /// Maps `u in [0,1)^d` affinely onto the box.
    pub(crate) fn scale_from_unit(&self, u: &mut [f64]) {
        for (i, v) in u.iter_mut().enumerate() {
            *v = self.lower[i] + *v * (self.upper[i] - self.lower[i]);
        }
    }
}
