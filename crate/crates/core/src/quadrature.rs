//! Numerical integration over boxes.
//!
//! One dimension uses globally adaptive Gauss–Legendre: the interval with the
//! largest error estimate is bisected until the summed estimate meets the
//! tolerance. Two and three dimensions use composite tensor-product
//! Gauss–Legendre grids whose panel count doubles per refinement level; the
//! difference between consecutive levels is the error estimate.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::{Error, Result, Window};

/// Default relative tolerance for all quadratures in the crate.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Absolute floor, scaled by the box volume, for integrals that vanish.
const ABS_FLOOR: f64 = 1e-14;

const ADAPTIVE_ORDER: usize = 15;
const TENSOR_ORDER: usize = 10;
const MAX_INTERVALS: usize = 4000;
const TENSOR_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static ADAPTIVE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static TENSOR: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        ADAPTIVE_ORDER => ADAPTIVE.get_or_init(|| gauss_legendre(ADAPTIVE_ORDER)),
        TENSOR_ORDER => TENSOR.get_or_init(|| gauss_legendre(TENSOR_ORDER)),
        _ => unreachable!("only two rules are cached"),
    }
}

fn checked(v: f64, x: &[f64]) -> Result<f64> {
    if v.is_nan() {
        Err(Error::InvalidValue(format!("integrand is NaN at {x:?}")))
    } else {
        Ok(v)
    }
}

fn gl_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    let (nodes, weights) = rule(ADAPTIVE_ORDER);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        let t = mid + half * x;
        sum += w * checked(f(t), &[t])?;
    }
    Ok(sum * half)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn make_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let m = 0.5 * (a + b);
    let coarse = gl_panel(f, a, b)?;
    let fine = gl_panel(f, a, m)? + gl_panel(f, m, b)?;
    Ok(Panel {
        a,
        b,
        value: fine,
        error: (fine - coarse).abs(),
    })
}

/// Globally adaptive Gauss–Legendre on `[a, b]`.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let abs_tol = ABS_FLOOR * (b - a).abs();
    let per_panel = 3 * ADAPTIVE_ORDER;
    let mut heap = BinaryHeap::new();
    let pieces = 4;
    let h = (b - a) / pieces as f64;
    for k in 0..pieces {
        let lo = a + h * k as f64;
        let hi = if k + 1 == pieces { b } else { lo + h };
        heap.push(make_panel(&f, lo, hi)?);
    }
    let mut evaluations = pieces * per_panel;
    let mut trace = Vec::new();
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= (rel_tol * value.abs()).max(abs_tol) {
            return Ok(Quadrature {
                value,
                error,
                evaluations,
            });
        }
        if heap.len() >= MAX_INTERVALS {
            trace.push(error);
            return Err(Error::QuadratureNotConverged {
                tolerance: rel_tol,
                trace,
            });
        }
        if heap.len() % 256 == 0 {
            trace.push(error);
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval cannot be split further in floating point.
            trace.push(error);
            return Err(Error::QuadratureNotConverged {
                tolerance: rel_tol,
                trace,
            });
        }
        heap.push(make_panel(&f, worst.a, m)?);
        heap.push(make_panel(&f, m, worst.b)?);
        evaluations += 2 * per_panel;
    }
}

fn tensor_level<F: Fn(&[f64]) -> f64>(f: &F, window: &Window, panels: usize) -> Result<f64> {
    let d = window.dim();
    let (nodes, weights) = rule(TENSOR_ORDER);
    // 1-D composite abscissae and weights per axis.
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
        .map(|k| {
            let (lo, hi) = (window.lower()[k], window.upper()[k]);
            let h = (hi - lo) / panels as f64;
            let mut xs = Vec::with_capacity(panels * TENSOR_ORDER);
            let mut ws = Vec::with_capacity(panels * TENSOR_ORDER);
            for p in 0..panels {
                let mid = lo + h * (p as f64 + 0.5);
                for (x, w) in nodes.iter().zip(weights) {
                    xs.push(mid + 0.5 * h * x);
                    ws.push(0.5 * h * w);
                }
            }
            (xs, ws)
        })
        .collect();
    let m = panels * TENSOR_ORDER;
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut sum = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            point[k] = axes[k].0[idx[k]];
            w *= axes[k].1[idx[k]];
        }
        sum += w * checked(f(&point), &point)?;
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return Ok(sum);
            }
        }
    }
}

fn integrate_tensor<F: Fn(&[f64]) -> f64>(f: &F, window: &Window, rel_tol: f64) -> Result<Quadrature> {
    let d = window.dim();
    let abs_tol = ABS_FLOOR * window.volume();
    let mut panels = 1;
    let mut previous = tensor_level(f, window, panels)?;
    let mut evaluations = TENSOR_ORDER.pow(d as u32);
    let mut trace = Vec::new();
    loop {
        let next_evals = (2 * panels * TENSOR_ORDER).pow(d as u32);
        if evaluations + next_evals > TENSOR_BUDGET {
            return Err(Error::QuadratureNotConverged {
                tolerance: rel_tol,
                trace,
            });
        }
        panels *= 2;
        let current = tensor_level(f, window, panels)?;
        evaluations += next_evals;
        let error = (current - previous).abs();
        trace.push(error);
        if error <= (rel_tol * current.abs()).max(abs_tol) {
            return Ok(Quadrature {
                value: current,
                error,
                evaluations,
            });
        }
        previous = current;
    }
}

/// Integrates `f` over `window` (Lebesgue measure) to relative tolerance
/// `rel_tol`.
pub fn integrate<F: Fn(&[f64]) -> f64>(f: F, window: &Window, rel_tol: f64) -> Result<Quadrature> {
    match window.dim() {
        1 => integrate_interval(|t| f(&[t]), window.lower()[0], window.upper()[0], rel_tol),
        2 | 3 => integrate_tensor(&f, window, rel_tol),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(ADAPTIVE_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // Exact up to degree 2n-1.
        let i28: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(28)).sum();
        assert!((i28 - 2.0 / 29.0).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_cases() {
        let unit = Window::interval(0.0, 1.0).unwrap();
        assert!((integrate(|_| 1.0, &unit, DEFAULT_REL_TOL).unwrap().value - 1.0).abs() < 1e-14);
        let w = Window::interval(0.0, 2.0).unwrap();
        let q = integrate(|x| x[0], &w, DEFAULT_REL_TOL).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12);
        // |x - 1| has a kink inside the interval.
        let q = integrate(|x| (x[0] - 1.0).abs(), &w, DEFAULT_REL_TOL).unwrap();
        assert!((q.value - 1.0).abs() < 1e-8);
        // A jump away from dyadic points.
        let q = integrate(|x| if x[0] > 0.3 { 2.0 } else { 0.0 }, &unit, DEFAULT_REL_TOL).unwrap();
        assert!((q.value - 1.4).abs() < 1e-8 * 1.4);
    }

    #[test]
    fn peaked_integrand() {
        let w = Window::interval(0.0, 2000.0).unwrap();
        let u = |t: f64| t / (1.0 + t * t * t);
        let q = integrate(|x| u(x[0]).powi(2), &w, 1e-10).unwrap();
        // Exact integral over [0, inf) is 1/3; the tail beyond T is ~ 1/(3 T^3).
        assert!((q.value - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn tensor_cases() {
        let sq = Window::unit(2).unwrap();
        let q = integrate(|_| 2.0, &sq, DEFAULT_REL_TOL).unwrap();
        assert!((q.value - 2.0).abs() < 1e-13);
        let cube = Window::new(vec![0.0; 3], vec![1.0, 2.0, 3.0]).unwrap();
        let q = integrate(|x| x[0] * x[1] * x[2], &cube, DEFAULT_REL_TOL).unwrap();
        assert!((q.value - 0.5 * 2.0 * 4.5).abs() < 1e-11);
        let q = integrate(|x| (-(x[0] - x[1]).powi(2)).exp(), &sq, DEFAULT_REL_TOL).unwrap();
        // 2 * int_0^1 (1 - t) e^{-t^2} dt = sqrt(pi) erf(1) - (1 - e^{-1})
        let exact = std::f64::consts::PI.sqrt() * 0.842_700_792_949_714_9 - (1.0 - (-1.0f64).exp());
        assert!((q.value - exact).abs() < 1e-10);
    }

    #[test]
    fn unsupported_dimension() {
        let w = Window::unit(4).unwrap();
        assert!(matches!(
            integrate(|_| 1.0, &w, DEFAULT_REL_TOL),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn nan_is_reported() {
        let w = Window::unit(1).unwrap();
        assert!(integrate(|_| f64::NAN, &w, DEFAULT_REL_TOL).is_err());
    }

    #[test]
    fn tensor_non_convergence_has_trace() {
        let sq = Window::unit(2).unwrap();
        let err = integrate(|x| if x[0] + x[1] > 1.0 / 3.0 { 1.0 } else { 0.0 }, &sq, 1e-12).unwrap_err();
        match err {
            Error::QuadratureNotConverged { trace, .. } => assert!(!trace.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }
}
