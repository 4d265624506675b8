//! Concentration and isoperimetry for Poisson processes.
//!
//! Tail bounds for counts `N ~ Poisson(s)` and for Lipschitz functionals,
//! each with an exact reference ([`poisson_tail_exact`]); the factorial
//! sandwich; surface measures of events, isoperimetric witness ratios, and
//! Monte Carlo checks of the L1 Poincare inequality and the co-area formula.
//!
//! ```
//! use ppt_core::concentration::{poisson_tail_exact, tail_bound_count_sharp, TailQuery};
//!
//! let q = TailQuery::new(1.0, 4.0).unwrap();
//! let exact = poisson_tail_exact(1.0, q.threshold().unwrap());
//! assert!(exact <= tail_bound_count_sharp(&q).unwrap());
//! ```

mod isoperimetry;
mod tail;

pub use isoperimetry::{
    cited_upper_bound, coarea_check, empty_witness, isoperimetric_bounds, isoperimetric_ratio, poincare_l1_check,
    surface_measure, CountRelation, EmptyWitness, Event, InequalityCheck, IsoperimetricRatio, SurfaceMeasure,
    INNER_SAMPLES, MAX_THRESHOLDS,
};
pub use tail::{
    laplace_bound_lipschitz, laplace_transform_estimate, poisson_pmf, poisson_tail_exact, rho_eta_tail,
    stirling_bounds, tail_bound_count_sharp, tail_bound_lipschitz, tail_bound_rho_eta, tail_grid, upper_int_part,
    RhoEtaRow, RhoEtaTail, TailQuery, TailRow,
};
