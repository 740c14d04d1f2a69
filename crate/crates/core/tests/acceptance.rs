//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{dmatrix, DMatrix, DVector};
use oscbath::cli::typicality;
use oscbath::gauss::{self, closed_form_u, expm, solve_lyapunov_direct};
use oscbath::linalg::block_diag;
use oscbath::model::{Hamiltonian, PhaseVector, SystemSpec};
use oscbath::sde::{self, IntegratorConfig, Scheme};
use oscbath::structure;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn coupled_pair() -> SystemSpec {
    SystemSpec::new(Hamiltonian::new(dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap(), 1.0, 1.0, 1).unwrap()
}

fn random_instance(i: u64, alpha: f64, sigma: f64) -> SystemSpec {
    let n = 2 + (i as usize % 7);
    let h = Hamiltonian::random_spd(n, 1000 + i, 0.1 + 0.05 * (i % 5) as f64).unwrap();
    SystemSpec::new(h, alpha, sigma, 1 + (i as usize * 5) % n).unwrap()
}

/// Couplings with `det Sigma(V) = 0`, i.e. a non-trivial conservative part.
fn structured_instances(alpha: f64, sigma: f64) -> Vec<SystemSpec> {
    let pair = dmatrix![2.0, 1.0; 1.0, 2.0];
    let diag = |n: usize| DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| (i + 1) as f64));
    let cases: Vec<(DMatrix<f64>, usize)> = vec![
        (DMatrix::identity(2, 2), 1),
        (DMatrix::identity(3, 3), 2),
        (DMatrix::identity(4, 4), 4),
        (diag(3), 2),
        (diag(4), 4),
        (Hamiltonian::chain(7, 1.0, 0.5).unwrap().coupling().clone(), 4),
        (Hamiltonian::chain(5, 1.0, 0.8).unwrap().coupling().clone(), 3),
        (block_diag(&pair, &dmatrix![3.0]), 1),
        (block_diag(&pair, &pair), 1),
        (DMatrix::identity(4, 4) + DMatrix::from_element(4, 4, 0.5), 1),
    ];
    cases
        .into_iter()
        .map(|(v, n)| SystemSpec::new(Hamiltonian::new(v).unwrap(), alpha, sigma, n).unwrap())
        .collect()
}

fn lyapunov_identity() -> Outcome {
    let (mut worst_res, mut worst_gap) = (0.0f64, 0.0f64);
    for i in 0..50u64 {
        let n = [2, 4, 8][i as usize % 3];
        let alpha = [0.1, 1.0, 10.0][(i as usize / 3) % 3];
        let h = Hamiltonian::random_spd(n, 7 + i, 0.1).unwrap();
        let spec = SystemSpec::new(h, alpha, 1.0, 1 + i as usize % n).unwrap();
        let (_, r) = structure::split(&spec).unwrap();
        let (a, g) = (r.a_prime(), r.g_prime());
        let u = closed_form_u(r.hamiltonian(), alpha).unwrap();
        let bound = 1e-9 * (1.0 + a.norm() * u.matrix().norm());
        worst_res = worst_res.max(u.residual(a, g) / bound);
        let direct = solve_lyapunov_direct(a, g).unwrap();
        worst_gap = worst_gap.max((u.matrix() - direct.matrix()).norm() / u.matrix().norm());
    }
    outcome(
        worst_res <= 1.0 && worst_gap <= 1e-8,
        format!("worst residual {worst_res:.2e} of bound, worst closed-form vs direct {worst_gap:.2e}"),
    )
}

fn covariance_limit() -> Outcome {
    let spec = coupled_pair();
    let (dec, r) = structure::split(&spec).unwrap();
    let t = 20.0 / r.spectral_abscissa().abs();
    let limit = gauss::stationary_state(&spec, &r).unwrap().covariance;
    let dist = (gauss::covariance_at(&spec, &r, t).unwrap().covariance - &limit).norm() / limit.norm();
    let drift = spec.drift();
    let mut worst = 0.0f64;
    for s in [0.1, 1.0, 5.0] {
        let exact = gauss::covariance_at(&spec, &r, s).unwrap().embed(&r).covariance;
        let oracle = common::covariance_quadrature(drift.matrix(), drift.noise_vector(), spec.sigma(), s);
        worst = worst.max((&exact - &oracle).norm() / oracle.norm());
    }
    outcome(
        dec.dim_zero() == 0 && dist <= 1e-8 && worst <= 1e-7,
        format!("distance at t = {t:.1}: {dist:.2e}; vs quadrature: {worst:.2e}"),
    )
}

fn mean_energy_limit() -> Outcome {
    let mut specs: Vec<SystemSpec> = (0..15u64)
        .map(|i| random_instance(i, [0.3, 1.0, 4.0][i as usize % 3], [0.5, 1.0, 2.0][i as usize % 3]))
        .collect();
    specs.extend(structured_instances(0.7, 1.3).into_iter().take(5));
    let (mut worst, mut with_l0) = (0.0f64, 0);
    for spec in &specs {
        let (dec, r) = structure::split(spec).unwrap();
        with_l0 += usize::from(dec.dim_zero() > 0);
        let expected = spec.sigma().powi(2) / (4.0 * spec.alpha()) * dec.dim_minus() as f64;
        let t = gauss::convergence_time(&r).unwrap();
        let e = gauss::mean_energy_at(spec, &r, &PhaseVector::zeros(spec.dim()), t).unwrap();
        let direct = solve_lyapunov_direct(r.a_prime(), r.g_prime()).unwrap();
        let e_direct = 0.5 * spec.sigma().powi(2) * (r.energy_form() * direct.matrix()).trace();
        worst = worst.max((e - expected).abs() / expected).max((e_direct - expected).abs() / expected);
    }
    outcome(
        worst <= 1e-8 && with_l0 >= 3,
        format!("{} instances ({with_l0} with dim L0 > 0), worst relative error {worst:.2e}", specs.len()),
    )
}

/// Criteria 4 and 5 share one ensemble.
fn monte_carlo_and_gibbs() -> (Outcome, Outcome) {
    let spec = coupled_pair();
    let (_, r) = structure::split(&spec).unwrap();
    let config = IntegratorConfig::new(1e-3, 15.0, &[15.0], Scheme::EulerMaruyama).unwrap();
    config.check_accuracy(&spec).unwrap();
    let (stats, finals) =
        sde::simulate_ensemble_recording(&spec, &PhaseVector::zeros(2), &config, 20_000, 20240601).unwrap();
    let cp = &stats.checkpoints[0];
    let target = gauss::limit_mean_energy(&spec, &r).unwrap();
    let z = (cp.mean_energy - target) / cp.energy_stderr;
    let limit = gauss::stationary_state(&spec, &r).unwrap().embed(&r).covariance;
    let gap = (&cp.covariance - &limit).norm() / limit.norm();
    let c4 = outcome(
        z.abs() <= 3.0 && gap <= 0.05,
        format!("E H = {:.4} +- {:.4} vs {target} (z = {z:.2}), covariance gap {gap:.4}", cp.mean_energy, cp.energy_stderr),
    );

    let diag = sde::gibbs_diagnostics(&finals, &spec, &r).unwrap();
    let var_err = diag.max_relative_variance_error();
    let skew = diag.max_abs_skewness();
    let c5 = outcome(
        var_err <= 0.05 && skew <= 0.1,
        format!("mode variances {:.4?} (target {}), max |skewness| {skew:.4}", diag.mode_variances, diag.target_variance),
    );
    (c4, c5)
}

fn linear_growth() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let spec = random_instance(i, 0.0, 0.5 + 0.1 * i as f64);
        for t in [0.5, 3.0, 17.0, 250.0] {
            let g = gauss::energy_growth_alpha0(&spec, t).unwrap();
            let expected = 0.5 * spec.sigma().powi(2) * t;
            worst = worst
                .max((g.total - expected).abs() / expected)
                .max((g.kinetic + g.potential - expected).abs() / expected);
        }
    }
    let spec = coupled_pair().with_alpha(0.0).unwrap();
    let times: Vec<f64> = (0..=15).map(|k| 5.0 + k as f64).collect();
    let config = IntegratorConfig::new(1e-3, 20.0, &times, Scheme::SemiImplicit).unwrap();
    config.check_accuracy(&spec).unwrap();
    let stats = sde::simulate_ensemble(&spec, &PhaseVector::zeros(2), &config, 10_000, 606).unwrap();
    let ts: Vec<f64> = stats.checkpoints.iter().map(|c| c.time).collect();
    let es: Vec<f64> = stats.checkpoints.iter().map(|c| c.mean_energy).collect();
    let (slope, _) = sde::linear_fit(&ts, &es).unwrap();
    let slope_err = (slope - 0.5).abs() / 0.5;
    outcome(
        worst <= 1e-10 && slope_err <= 0.05,
        format!("exact formula worst {worst:.2e}; empirical slope {slope:.4} (error {:.2}%)", 100.0 * slope_err),
    )
}

fn typicality_check() -> Outcome {
    let report = typicality(4, 1, 1000, 77, 0.1).unwrap();
    outcome(
        report.degenerate == 0 && report.structured_all_flagged(),
        format!(
            "{} / {} degenerate (min normalized |det| {:.2e}); {} structured cases flagged: {}",
            report.degenerate,
            report.samples,
            report.min_normalized_det,
            report.structured.len(),
            report.structured_all_flagged()
        ),
    )
}

fn decomposition_invariance() -> Outcome {
    let mut specs: Vec<SystemSpec> = (0..50u64).map(|i| random_instance(i, 0.5 + 0.1 * (i % 4) as f64, 1.0)).collect();
    specs.extend(structured_instances(1.0, 1.0));
    let (mut leak, mut decay, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    let mut noise_outside = 0.0f64;
    let mut with_l0 = 0;
    for (k, spec) in specs.iter().enumerate() {
        let (dec, r) = structure::split(spec).unwrap();
        let a = spec.drift().matrix().clone();
        let g = spec.drift().noise_vector().clone();
        leak = leak.max((dec.projector_zero() * &a * dec.projector_minus()).norm() / a.norm());
        noise_outside = noise_outside.max((dec.projector_zero() * &g).amax());

        let t = gauss::convergence_time(&r).unwrap();
        let flow = expm(&a, t).unwrap();
        let h = |x: &DVector<f64>| spec.hamiltonian().energy(&PhaseVector::from_stacked(x).unwrap()).unwrap();
        let coeffs = DVector::from_fn(dec.basis_minus().ncols(), |i, _| ((i + k) % 5) as f64 - 1.7);
        let psi_minus = dec.basis_minus() * coeffs;
        decay = decay.max(h(&(&flow * &psi_minus)) / h(&psi_minus));
        if dec.dim_zero() > 0 {
            with_l0 += 1;
            let coeffs = DVector::from_fn(dec.basis_zero().ncols(), |i, _| ((i + 2 * k) % 3) as f64 - 0.9);
            let psi_zero = dec.basis_zero() * coeffs;
            drift = drift.max((h(&(&flow * &psi_zero)) - h(&psi_zero)).abs() / h(&psi_zero));
        }
    }
    outcome(
        leak <= 1e-8 && noise_outside == 0.0 && decay <= 1e-8 && drift <= 1e-8 && with_l0 == 10,
        format!(
            "{} instances: |P0 A P-| {leak:.2e}, |P0 g| {noise_outside:e}, L- energy ratio {decay:.2e}, L0 drift {drift:.2e} ({with_l0} with L0)",
            specs.len()
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |k: usize, name: &str, result: Outcome, elapsed: Duration| {
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!("criterion {k} [{name}]: {verdict} ({:.1}s) {}", elapsed.as_secs_f64(), result.detail);
    };

    let timed = |f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let r = f();
        (r, start.elapsed())
    };
    let (r, e) = timed(&lyapunov_identity);
    report(1, "Lyapunov identity", r, e);
    let (r, e) = timed(&covariance_limit);
    report(2, "covariance limit", r, e);
    let (r, e) = timed(&mean_energy_limit);
    report(3, "mean-energy limit", r, e);
    let start = Instant::now();
    let (c4, c5) = monte_carlo_and_gibbs();
    let e = start.elapsed();
    report(4, "Monte Carlo consistency", c4, e);
    report(5, "Gibbs law", c5, Duration::ZERO);
    let (r, e) = timed(&linear_growth);
    report(6, "linear growth", r, e);
    let (r, e) = timed(&typicality_check);
    report(7, "typicality", r, e);
    let (r, e) = timed(&decomposition_invariance);
    report(8, "decomposition invariance", r, e);

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
