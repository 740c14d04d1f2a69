//! The exact Gaussian propagation against independent quadrature.

mod common;

use common::{covariance_quadrature, gauss_legendre, taylor_flow};
use nalgebra::{dmatrix, DMatrix, DVector};
use oscbath::gauss;
use oscbath::model::{Hamiltonian, PhaseVector, SystemSpec};
use oscbath::structure;

fn instances() -> Vec<SystemSpec> {
    vec![
        SystemSpec::new(Hamiltonian::new(dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap(), 1.0, 1.0, 1).unwrap(),
        SystemSpec::new(Hamiltonian::new(dmatrix![1.0]).unwrap(), 0.3, 0.7, 1).unwrap(),
        SystemSpec::new(Hamiltonian::new(DMatrix::identity(3, 3)).unwrap(), 2.0, 1.5, 2).unwrap(),
        SystemSpec::new(Hamiltonian::chain(5, 1.0, 0.7).unwrap(), 0.5, 1.0, 3).unwrap(),
        SystemSpec::new(Hamiltonian::random_spd(4, 17, 0.3).unwrap(), 1.3, 0.9, 2).unwrap(),
    ]
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn restricted_covariance_matches_quadrature() {
    for spec in instances() {
        let (_, r) = structure::split(&spec).unwrap();
        let drift = spec.drift();
        for t in [0.1, 1.0, 3.0] {
            let exact = gauss::covariance_at(&spec, &r, t).unwrap().embed(&r).covariance;
            let oracle = covariance_quadrature(drift.matrix(), drift.noise_vector(), spec.sigma(), t);
            assert!(rel(&exact, &oracle) < 1e-7, "N = {}, t = {t}: {:e}", spec.dim(), rel(&exact, &oracle));
        }
    }
}

#[test]
fn van_loan_covariance_matches_quadrature_without_friction() {
    for spec in instances() {
        let spec = spec.with_alpha(0.0).unwrap();
        let drift = spec.drift();
        for t in [0.5, 2.0] {
            let exact = gauss::full_covariance_at(&spec, t).unwrap();
            let oracle = covariance_quadrature(drift.matrix(), drift.noise_vector(), spec.sigma(), t);
            assert!(rel(&exact, &oracle) < 1e-7, "t = {t}: {:e}", rel(&exact, &oracle));
        }
    }
}

#[test]
fn mean_matches_taylor_flow() {
    for spec in instances() {
        let x = DVector::from_fn(2 * spec.dim(), |i, _| ((i * 7 % 5) as f64 - 2.0) * 0.3);
        let psi = PhaseVector::from_stacked(&x).unwrap();
        for t in [0.0, 0.7, 4.0] {
            let exact = gauss::mean_at(&spec, &psi, t).unwrap().to_stacked();
            let oracle = taylor_flow(spec.drift().matrix(), &x, t);
            assert!((&exact - &oracle).norm() <= 1e-11 * x.norm());
        }
    }
}

#[test]
fn energy_growth_matches_quadrature_diagonal() {
    // E T and E U are half traces of the kinetic and potential blocks of C(t)
    for spec in instances() {
        let spec = spec.with_alpha(0.0).unwrap();
        let n = spec.dim();
        let drift = spec.drift();
        let t = 2.5;
        let c = covariance_quadrature(drift.matrix(), drift.noise_vector(), spec.sigma(), t);
        let v = spec.hamiltonian().coupling();
        let eu = 0.5 * (v * c.view((0, 0), (n, n))).trace();
        let et = 0.5 * c.view((n, n), (n, n)).trace();
        let g = gauss::energy_growth_alpha0(&spec, t).unwrap();
        assert!((g.kinetic - et).abs() < 1e-8, "{} vs {et}", g.kinetic);
        assert!((g.potential - eu).abs() < 1e-8, "{} vs {eu}", g.potential);
    }
}

#[test]
fn stationary_covariance_is_long_time_quadrature() {
    let spec = SystemSpec::new(Hamiltonian::new(dmatrix![1.0]).unwrap(), 1.0, 1.0, 1).unwrap();
    let (_, r) = structure::split(&spec).unwrap();
    let limit = gauss::stationary_state(&spec, &r).unwrap().embed(&r).covariance;
    let drift = spec.drift();
    let oracle = covariance_quadrature(drift.matrix(), drift.noise_vector(), 1.0, 60.0);
    // sigma^2 U = diag(1/2, 1/2) for a unit oscillator with alpha = 1
    assert!((limit[(0, 0)] - 0.5).abs() < 1e-14 && (limit[(1, 1)] - 0.5).abs() < 1e-14);
    assert!(rel(&limit, &oracle) < 1e-9);
}

#[test]
fn legendre_rule_integrates_polynomials_exactly() {
    let (x, w) = gauss_legendre(8);
    // degree <= 15 is exact
    let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
    assert!((integral - 2.0 / 15.0).abs() < 1e-14);
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
}

#[test]
fn taylor_flow_rotates() {
    let a = dmatrix![0.0, 1.0; -1.0, 0.0];
    let y = taylor_flow(&a, &DVector::from_vec(vec![1.0, 0.0]), 2.0);
    assert!((y[0] - 2f64.cos()).abs() < 1e-13 && (y[1] + 2f64.sin()).abs() < 1e-13);
}
