//! # ppt-core
//!
//! Optimal transport between laws of finite point configurations, and the
//! machinery needed to test transport bounds numerically.
//!
//! A *configuration* is a finite multiset of points in a bounded box of
//! `R^d` (`d` in 1..=3). Three ground distances act on configurations:
//!
//! | Distance | Function | Value |
//! |---|---|---|
//! | trivial | [`metrics::rho0`] | 0 if equal, 1 otherwise |
//! | total variation | [`metrics::rho1`] | number of unmatched atoms, both directions |
//! | Wasserstein | [`metrics::rho2`] | optimal matching cost, `+inf` for unequal counts |
//!
//! The Rubinstein distance between two laws is the optimal transport cost
//! for one of these ground distances. The crate provides:
//!
//! - samplers for Poisson, Cox and Gibbs processes and for two explicit
//!   couplings ([`simulate`]);
//! - closed-form, quadrature and Monte Carlo upper bounds on Rubinstein
//!   distances ([`bounds`]);
//! - exact discrete transport (assignment, network simplex), empirical
//!   primal estimates and dual lower bounds ([`transport`]);
//! - Poisson tail, Laplace, Stirling, surface-measure and isoperimetric
//!   estimates ([`concentration`]).
//!
//! Every randomized operation takes a [`SeedSpec`]; the same seed always
//! produces bit-identical output, independently of the rayon thread count.
//!
//! ```
//! use ppt_core::{metrics, Configuration};
//!
//! let omega = Configuration::from_points(1, &[[0.0], [0.5]]).unwrap();
//! let eta = Configuration::from_points(1, &[[0.5], [1.0], [2.0]]).unwrap();
//! assert_eq!(metrics::rho1(&omega, &eta), 3);
//! ```

#![forbid(unsafe_code)]
// `!(x >= 0.0)` rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod concentration;
mod configuration;
mod error;
mod estimate;
mod gradient;
pub mod hexfloat;
mod intensity;
pub mod metrics;
pub mod quadrature;
mod seed;
pub mod simulate;
pub mod transport;
mod window;

pub use configuration::{sym_diff_count, Configuration};
pub use error::{Error, Result};
pub use estimate::{replicate, Estimate};
pub use gradient::{grad_sharp, rademacher_check, Functional};
pub use intensity::{Density, IntensityMeasure};
pub use metrics::ExtendedReal;
pub use seed::SeedSpec;
pub use window::Window;
