//! The scalar expression grammar shared by densities and pair potentials.
//!
//! ```text
//! const:c              c
//! poly:c0,c1,...       c0 + c1 t + c2 t^2 + ...
//! exp:a,b              a e^{b t}
//! step:s,lo,hi         lo for t < s, hi for t >= s
//! ```
//!
//! Densities read `t = x[0]`, the first coordinate; pair potentials read
//! `t = |x - y|`, the Euclidean distance.

use std::fmt;

use ppt_core::simulate::PairPotential;
use ppt_core::{Density, Window};

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Poly(Vec<f64>),
    Exp { a: f64, b: f64 },
    Step { threshold: f64, lo: f64, hi: f64 },
}

/// Malformed expression, with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at position {position} in {text:?}")]
pub struct ExprError {
    pub text: String,
    pub position: usize,
    pub message: String,
}

/// Grid intervals used to bound polynomials on a window.
const GRID: usize = 1024;

/// Parses an expression of the grammar above.
///
/// ```
/// use ppt_cli::expr::{parse_density_expr, Expr};
///
/// assert_eq!(parse_density_expr("poly:0,1").unwrap(), Expr::Poly(vec![0.0, 1.0]));
/// let err = parse_density_expr("exp:1,x").unwrap_err();
/// assert_eq!(err.position, 6);
/// ```
pub fn parse_density_expr(text: &str) -> Result<Expr, ExprError> {
    let fail = |position: usize, message: String| ExprError {
        text: text.to_string(),
        position,
        message,
    };
    let (name, body) = text
        .split_once(':')
        .ok_or_else(|| fail(0, "expected `name:arguments`".into()))?;
    let start = name.len() + 1;
    let mut args = Vec::new();
    let mut offset = start;
    for token in body.split(',') {
        let trimmed = token.trim();
        let at = offset + (token.len() - token.trim_start().len());
        let v: f64 = trimmed
            .parse()
            .map_err(|_| fail(at, format!("expected a number, found {trimmed:?}")))?;
        if !v.is_finite() {
            return Err(fail(at, format!("non-finite number {trimmed:?}")));
        }
        args.push((at, v));
        offset += token.len() + 1;
    }
    let arity = |n: usize| -> Result<(), ExprError> {
        if args.len() == n {
            Ok(())
        } else {
            let at = args.get(n).map_or(text.len(), |a| a.0);
            Err(fail(at, format!("`{name}` takes {n} argument(s), got {}", args.len())))
        }
    };
    let v = |i: usize| args[i].1;
    match name {
        "const" => {
            arity(1)?;
            Ok(Expr::Const(v(0)))
        }
        "poly" => Ok(Expr::Poly(args.iter().map(|a| a.1).collect())),
        "exp" => {
            arity(2)?;
            if v(0) < 0.0 {
                return Err(fail(args[0].0, "`exp` needs a >= 0".into()));
            }
            Ok(Expr::Exp { a: v(0), b: v(1) })
        }
        "step" => {
            arity(3)?;
            Ok(Expr::Step {
                threshold: v(0),
                lo: v(1),
                hi: v(2),
            })
        }
        _ => Err(fail(
            0,
            format!("unknown expression `{name}`; expected const, poly, exp or step"),
        )),
    }
}

impl Expr {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Poly(c) => c.iter().rev().fold(0.0, |acc, ci| acc * t + ci),
            Expr::Exp { a, b } => a * (b * t).exp(),
            Expr::Step { threshold, lo, hi } => {
                if t < *threshold {
                    *lo
                } else {
                    *hi
                }
            }
        }
    }

    /// An upper bound of the expression on `[a, b]`; exact except for
    /// polynomials, where a grid maximum is padded by a derivative bound.
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Exp { .. } => self.eval(a).max(self.eval(b)),
            Expr::Step { threshold, lo, hi } => {
                let mut s = f64::NEG_INFINITY;
                if a < *threshold {
                    s = s.max(*lo);
                }
                if b >= *threshold {
                    s = s.max(*hi);
                }
                s
            }
            Expr::Poly(c) => {
                let m = a.abs().max(b.abs());
                let slope: f64 = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, ci)| i as f64 * ci.abs() * m.powi(i as i32 - 1))
                    .sum();
                let h = (b - a) / GRID as f64;
                let top = grid(a, b).map(|t| self.eval(t)).fold(f64::NEG_INFINITY, f64::max);
                top + 0.5 * slope * h
            }
        }
    }

    /// Smallest value on the evaluation grid of `[a, b]`, endpoints included.
    fn grid_min(&self, a: f64, b: f64) -> f64 {
        grid(a, b).map(|t| self.eval(t)).fold(f64::INFINITY, f64::min)
    }

    /// Density `x -> expr(x[0])` on `window`. Rejects expressions that are
    /// negative somewhere on the evaluation grid.
    pub fn to_density(&self, window: &Window, source: &str) -> Result<Density, ExprError> {
        let (a, b) = (window.lower()[0], window.upper()[0]);
        let invalid = |message: String| ExprError {
            text: source.to_string(),
            position: 0,
            message,
        };
        let min = self.grid_min(a, b);
        if min < 0.0 {
            return Err(invalid(format!("density takes the negative value {min} on [{a}, {b}]")));
        }
        let density = match self {
            Expr::Const(c) => Density::constant(*c),
            _ => {
                let e = self.clone();
                Density::new(move |x| e.eval(x[0]), self.sup_on(a, b))
            }
        };
        density
            .map(|d| d.with_label(source))
            .map_err(|e| invalid(e.to_string()))
    }

    /// Pair potential `phi(x - y) = expr(|x - y|)`. Constants keep their
    /// closed-form paths.
    pub fn to_potential(&self, source: &str) -> Result<PairPotential, ExprError> {
        let invalid = |message: String| ExprError {
            text: source.to_string(),
            position: 0,
            message,
        };
        match self {
            Expr::Const(c) => PairPotential::constant(*c).map_err(|e| invalid(e.to_string())),
            _ => {
                let e = self.clone();
                Ok(PairPotential::new(move |d| e.eval(d.iter().map(|v| v * v).sum::<f64>().sqrt())).with_label(source))
            }
        }
    }
}

fn grid(a: f64, b: f64) -> impl Iterator<Item = f64> {
    (0..=GRID).map(move |i| a + (b - a) * i as f64 / GRID as f64)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "const:{c:?}"),
            Expr::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|v| format!("{v:?}")).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            Expr::Exp { a, b } => write!(f, "exp:{a:?},{b:?}"),
            Expr::Step { threshold, lo, hi } => write!(f, "step:{threshold:?},{lo:?},{hi:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ppt_core::IntensityMeasure;

    #[test]
    fn parses_each_form() {
        assert_eq!(parse_density_expr("const:2").unwrap(), Expr::Const(2.0));
        assert_eq!(parse_density_expr("poly:0, 1").unwrap(), Expr::Poly(vec![0.0, 1.0]));
        assert_eq!(parse_density_expr("exp:1,-2").unwrap(), Expr::Exp { a: 1.0, b: -2.0 });
        assert_eq!(
            parse_density_expr("step:0.5,0,2").unwrap(),
            Expr::Step {
                threshold: 0.5,
                lo: 0.0,
                hi: 2.0
            }
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_density_expr("const").unwrap_err();
        assert_eq!(e.position, 0);
        let e = parse_density_expr("step:0.5,,2").unwrap_err();
        assert_eq!(e.position, 9);
        let e = parse_density_expr("const:1,2").unwrap_err();
        assert_eq!(e.position, 8);
        let e = parse_density_expr("step:1,2").unwrap_err();
        assert_eq!(e.position, 8);
        assert!(parse_density_expr("sin:1").unwrap_err().message.contains("unknown"));
        assert!(parse_density_expr("const:inf").is_err());
        assert!(parse_density_expr("exp:-1,0").is_err());
        assert!(e.to_string().contains("position 8"));
    }

    #[test]
    fn display_round_trips() {
        for text in ["const:2", "poly:0.5,-1,3", "exp:1,-2.5", "step:0.5,0,2"] {
            let e = parse_density_expr(text).unwrap();
            assert_eq!(parse_density_expr(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn densities_over_windows() {
        let w = Window::unit(1).unwrap();
        let step = parse_density_expr("step:0.5,0,2")
            .unwrap()
            .to_density(&w, "step:0.5,0,2")
            .unwrap();
        let sigma = IntensityMeasure::new(w.clone(), step).unwrap();
        assert!((sigma.total_mass() - 1.0).abs() < 1e-9);
        let poly = parse_density_expr("poly:0,1").unwrap();
        let d = poly.to_density(&w, "poly:0,1").unwrap();
        assert_eq!(d.eval(&[0.25]), 0.25);
        assert!(d.sup() >= 1.0 && d.sup() < 1.001);
        assert_eq!(d.label(), "poly:0,1");
        assert!(parse_density_expr("poly:-1,1")
            .unwrap()
            .to_density(&w, "poly:-1,1")
            .is_err());
    }

    #[test]
    fn polynomial_sup_is_an_upper_bound() {
        let p = Expr::Poly(vec![0.1, 3.0, -4.0]);
        let exact = 0.1 + 9.0 / 16.0;
        let s = p.sup_on(0.0, 1.0);
        assert!(s >= exact && s < exact + 0.01);
    }

    #[test]
    fn potentials_use_distance() {
        let phi = parse_density_expr("poly:0,1")
            .unwrap()
            .to_potential("poly:0,1")
            .unwrap();
        assert!((phi.eval(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        let c = parse_density_expr("const:0.05")
            .unwrap()
            .to_potential("const:0.05")
            .unwrap();
        assert_eq!(c.as_constant(), Some(0.05));
    }
}
