use approx::assert_relative_eq;
use ppt_core::concentration::{
    coarea_check, empty_witness, isoperimetric_ratio, laplace_bound_lipschitz, laplace_transform_estimate,
    poincare_l1_check, poisson_pmf, poisson_tail_exact, rho_eta_tail, tail_grid, CountRelation, Event,
};
use ppt_core::{metrics, Configuration, IntensityMeasure, SeedSpec, Window};

fn unit(mass: f64) -> IntensityMeasure {
    IntensityMeasure::constant(Window::unit(2).unwrap(), mass).unwrap()
}

#[test]
fn count_mgf_attains_laplace_bound() {
    for mass in [0.5, 1.0, 3.0] {
        for lambda in [0.1, 0.5, 1.0] {
            // Series for E exp(lambda (N - mass)).
            let mgf: f64 = (0..200u64)
                .map(|k| poisson_pmf(mass, k) * (lambda * (k as f64 - mass)).exp())
                .sum();
            assert_relative_eq!(mgf, laplace_bound_lipschitz(lambda, mass), max_relative = 1e-12);
        }
    }
}

#[test]
fn centred_count_mgf_by_monte_carlo() {
    let sigma = unit(1.5);
    let f = |w: &Configuration| w.len() as f64 - 1.5;
    let est = laplace_transform_estimate(&f, &sigma, 0.5, 50_000, SeedSpec::new(9, 0)).unwrap();
    assert!(est.within(laplace_bound_lipschitz(0.5, 1.5), 4.0), "{est:?}");
}

#[test]
fn tail_grid_rows_serialize() {
    let rows = tail_grid(&[1.0], &[1.0, 2.0]).unwrap();
    let json = serde_json::to_string(&rows).unwrap();
    assert!(json.contains("\"bound_lipschitz\""));
    assert_eq!(rows[1].exact, poisson_tail_exact(1.0, 3));
}

#[test]
fn rho_eta_tail_in_two_dimensions() {
    let sigma = unit(3.0);
    let eta = Configuration::from_points(2, &[[0.1, 0.1], [0.5, 0.5]]).unwrap();
    let report = rho_eta_tail(&sigma, &eta, &[1.0, 2.0, 3.0], 20_000, SeedSpec::new(4, 4)).unwrap();
    assert_eq!(report.n_checked, 20_000);
    for row in &report.rows {
        assert!(row.empirical.within(row.exact, 4.0), "{row:?}");
        assert!(row.bound >= row.exact, "{row:?}");
    }
}

#[test]
fn isoperimetric_witness_in_two_dimensions() {
    let sigma = unit(1.0);
    let r = isoperimetric_ratio(
        &Event::count(CountRelation::Exactly, 0),
        &sigma,
        20_000,
        SeedSpec::new(2, 0),
    )
    .unwrap();
    let w = empty_witness(1.0).unwrap();
    assert_relative_eq!(r.exact.unwrap(), w.exact_ratio, max_relative = 1e-12);
    assert!(r.estimate.within(w.exact_ratio, 3.0), "{:?}", r.estimate);
    assert!(r.exact.unwrap() > r.stated_bounds.1);
}

#[test]
fn poincare_and_coarea_on_quadrant_counts() {
    let sigma = unit(4.0);
    let k = Window::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
    let count = move |w: &Configuration| w.count_in(&k) as f64;
    let c = coarea_check(&count, &sigma, 10_000, SeedSpec::new(3, 1)).unwrap();
    assert!(c.agrees(3.0));
    assert!(c.lhs.within(1.0, 4.0), "{:?}", c.lhs);
    let eta = Configuration::from_points(2, &[[0.2, 0.3]]).unwrap();
    let dist = move |w: &Configuration| metrics::rho1(w, &eta) as f64;
    assert!(poincare_l1_check(&dist, &sigma, 10_000, SeedSpec::new(3, 2))
        .unwrap()
        .holds(3.0));
}
