//! Exact Gaussian analysis of the linear SDE `d psi = A psi dt + sigma g dW`.
//!
//! From a deterministic start the law of `psi(t)` is Gaussian with mean
//! `e^{tA} psi(0)`. On the thermalizing subspace the covariance is
//! `C(t) = sigma^2 (U - e^{tA'} U e^{tA'^T})` where `U` solves the Lyapunov
//! equation; the limit `sigma^2 U` is the Gibbs law at inverse temperature
//! `2 alpha / sigma^2`. Without dissipation the mean energy instead grows
//! linearly at rate `sigma^2 / 2`.

mod expm;
mod lyapunov;

pub use expm::expm;
pub use lyapunov::{
    check_hurwitz, closed_form_u, lyapunov_residual, solve_lyapunov_direct, LyapunovSolution, HURWITZ_TOL,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{PhaseVector, SystemSpec};
use crate::structure::RestrictedSystem;

/// Decay times after which the covariance counts as converged.
pub const CONVERGENCE_DECAY_TIMES: f64 = 20.0;

/// Mean and covariance of the state at a given time. `time` is infinite for
/// the stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub time: f64,
}

impl GaussianState {
    /// Lifts a state in restricted coordinates into full phase space.
    pub fn embed(&self, restricted: &RestrictedSystem) -> GaussianState {
        let p = restricted.embedding();
        GaussianState {
            mean: p * &self.mean,
            covariance: p * &self.covariance * p.transpose(),
            time: self.time,
        }
    }
}

fn require_dissipation(spec: &SystemSpec) -> Result<()> {
    if spec.alpha() <= 0.0 {
        return Err(Error::ModeMismatch("alpha > 0 (use the alpha = 0 growth analysis instead)".into()));
    }
    Ok(())
}

fn check_pairing(spec: &SystemSpec, restricted: &RestrictedSystem) -> Result<()> {
    if restricted.embedding().nrows() != 2 * spec.dim()
        || restricted.alpha() != spec.alpha()
        || restricted.sigma() != spec.sigma()
    {
        return Err(Error::invalid("restricted system was built for a different instance"));
    }
    Ok(())
}

/// `20 / |spectral abscissa of A'|`.
pub fn convergence_time(restricted: &RestrictedSystem) -> Result<f64> {
    let abscissa = check_hurwitz(restricted.a_prime())?;
    Ok(CONVERGENCE_DECAY_TIMES / abscissa.abs())
}

/// Exact `C(t)` in the restricted coordinates of `L-`, zero mean.
pub fn covariance_at(spec: &SystemSpec, restricted: &RestrictedSystem, t: f64) -> Result<GaussianState> {
    require_dissipation(spec)?;
    check_pairing(spec, restricted)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite and >= 0, got {t}")));
    }
    let a = restricted.a_prime();
    check_hurwitz(a)?;
    let u = closed_form_u(restricted.hamiltonian(), spec.alpha())?.into_matrix();
    let e = expm(a, t)?;
    let c = (&u - &e * &u * e.transpose()) * spec.sigma().powi(2);
    Ok(GaussianState { mean: DVector::zeros(a.nrows()), covariance: linalg::symmetrize(&c), time: t })
}

/// Full-space covariance `sigma^2 int_0^t e^{sA} g g^T e^{sA^T} ds` by Van
/// Loan's block exponential. Valid for any `alpha`, including the
/// conservative case where no Lyapunov solution exists.
pub fn full_covariance_at(spec: &SystemSpec, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite and >= 0, got {t}")));
    }
    let drift = spec.drift();
    let a = drift.matrix();
    let g = drift.noise_vector();
    let m = a.nrows();
    let mut block = DMatrix::zeros(2 * m, 2 * m);
    block.view_mut((0, 0), (m, m)).copy_from(&(-a));
    block.view_mut((0, m), (m, m)).copy_from(&(g * g.transpose()));
    block.view_mut((m, m), (m, m)).copy_from(&a.transpose());
    let f = expm(&block, t)?;
    let f12 = f.view((0, m), (m, m));
    let f22 = f.view((m, m), (m, m));
    let c = f22.transpose() * f12 * spec.sigma().powi(2);
    Ok(linalg::symmetrize(&c))
}

/// `e^{tA} psi(0)`.
pub fn mean_at(spec: &SystemSpec, psi0: &PhaseVector, t: f64) -> Result<PhaseVector> {
    if psi0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: psi0.dim() });
    }
    let e = expm(spec.drift().matrix(), t)?;
    PhaseVector::from_stacked(&(e * psi0.to_stacked()))
}

/// The limiting law on `L-`: zero mean, covariance `sigma^2 U'`.
pub fn stationary_state(spec: &SystemSpec, restricted: &RestrictedSystem) -> Result<GaussianState> {
    require_dissipation(spec)?;
    check_pairing(spec, restricted)?;
    let u = closed_form_u(restricted.hamiltonian(), spec.alpha())?.into_matrix();
    Ok(GaussianState {
        mean: DVector::zeros(u.nrows()),
        covariance: u * spec.sigma().powi(2),
        time: f64::INFINITY,
    })
}

/// `sigma^2 / (4 alpha) * dim L-`.
pub fn limit_mean_energy(spec: &SystemSpec, restricted: &RestrictedSystem) -> Result<f64> {
    require_dissipation(spec)?;
    Ok(spec.sigma().powi(2) / (4.0 * spec.alpha()) * (2 * restricted.dim()) as f64)
}

/// Log of the Gibbs density `exp(-beta H'(psi')) / Z`, `beta = 2 alpha / sigma^2`,
/// with respect to Lebesgue measure on `L-`. `Z` is the normalizer of the
/// Gaussian with covariance `sigma^2 U'`.
pub fn gibbs_log_density(spec: &SystemSpec, restricted: &RestrictedSystem, psi_prime: &DVector<f64>) -> Result<f64> {
    require_dissipation(spec)?;
    check_pairing(spec, restricted)?;
    let beta = 2.0 * spec.alpha() / spec.sigma().powi(2);
    let d = restricted.dim() as f64;
    let log_det_v = restricted.v_prime().clone().cholesky().ok_or(Error::NotPositiveDefinite)?.ln_determinant();
    // log Z = log det(2 pi sigma^2 U') / 2 = d log(2 pi / beta) - log det V' / 2
    let log_z = d * (2.0 * std::f64::consts::PI / beta).ln() - 0.5 * log_det_v;
    Ok(-beta * restricted.energy(psi_prime)? - log_z)
}

/// `E H(psi(t))` from a deterministic start, for `alpha > 0`.
///
/// The energy form is block diagonal across `L0 ⊕ L-`, so the deterministic
/// part contributes `H(e^{tA} psi0)` and the fluctuations `tr(Q' C'(t)) / 2`.
pub fn mean_energy_at(spec: &SystemSpec, restricted: &RestrictedSystem, psi0: &PhaseVector, t: f64) -> Result<f64> {
    let cov = covariance_at(spec, restricted, t)?;
    let mean = mean_at(spec, psi0, t)?;
    let fluct = 0.5 * (restricted.energy_form() * &cov.covariance).trace();
    Ok(spec.hamiltonian().energy(&mean)? + fluct)
}

/// Expected kinetic, potential and total energy of the zero-start solution
/// when `alpha = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrowth {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// Evaluates `E T = (sigma^2/2) int_0^t e_n^T cos^2(sqrt(V) s) e_n ds` and the
/// matching `sin^2` integral for `E U` in the eigenbasis of `V`.
pub fn energy_growth_alpha0(spec: &SystemSpec, t: f64) -> Result<EnergyGrowth> {
    if spec.alpha() != 0.0 {
        return Err(Error::ModeMismatch(format!("alpha = 0 for linear growth (got {})", spec.alpha())));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite and >= 0, got {t}")));
    }
    let eig = spec.hamiltonian().coupling().clone().symmetric_eigen();
    let half_s2 = 0.5 * spec.sigma().powi(2);
    let (mut kinetic, mut potential, mut weight) = (0.0, 0.0, 0.0);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let omega = lambda.sqrt();
        let c = eig.eigenvectors[(spec.site(), k)].powi(2);
        let osc = (2.0 * omega * t).sin() / (4.0 * omega);
        kinetic += c * (0.5 * t + osc);
        potential += c * (0.5 * t - osc);
        weight += c;
    }
    // the weights sum to |e_n|^2 = 1 up to rounding of the eigenbasis
    let scale = half_s2 / weight;
    Ok(EnergyGrowth { kinetic: kinetic * scale, potential: potential * scale, total: half_s2 * t })
}

/// `E H(psi(t)) = H(psi0) + sigma^2 t / 2` for `alpha = 0`; the cross term
/// between the free flow and the zero-mean forced part vanishes in mean.
pub fn expected_energy_alpha0(spec: &SystemSpec, psi0: &PhaseVector, t: f64) -> Result<f64> {
    let growth = energy_growth_alpha0(spec, t)?;
    Ok(spec.hamiltonian().energy(psi0)? + growth.total)
}

/// Normal-mode coordinates of the restricted system: for `V' = W L W^T`,
/// `x = L^{1/2} W^T q'` and `y = W^T p'`. Under the Gibbs law each of the
/// `2d` coordinates has variance `sigma^2 / (2 alpha)`.
#[derive(Debug, Clone)]
pub struct NormalModes {
    frequencies: DVector<f64>,
    transform: DMatrix<f64>,
}

impl NormalModes {
    pub fn new(restricted: &RestrictedSystem) -> Self {
        let eig = restricted.v_prime().clone().symmetric_eigen();
        let d = restricted.dim();
        let frequencies = eig.eigenvalues.map(f64::sqrt);
        let wt = eig.eigenvectors.transpose();
        let mut transform = DMatrix::zeros(2 * d, 2 * d);
        let scaled = DMatrix::from_diagonal(&frequencies) * &wt;
        transform.view_mut((0, 0), (d, d)).copy_from(&scaled);
        transform.view_mut((d, d), (d, d)).copy_from(&wt);
        Self { frequencies, transform }
    }

    pub fn frequencies(&self) -> &DVector<f64> {
        &self.frequencies
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn coordinates(&self, psi_prime: &DVector<f64>) -> DVector<f64> {
        &self.transform * psi_prime
    }

    /// Covariance of the mode coordinates; its diagonal holds twice the mean
    /// energy carried by each quadratic degree of freedom.
    pub fn mode_covariance(&self, covariance: &DMatrix<f64>) -> DMatrix<f64> {
        &self.transform * covariance * self.transform.transpose()
    }
}

/// Eigenvalues of `Q'^{1/2} C Q'^{1/2}`; all equal to `sigma^2 / (2 alpha)` in
/// equilibrium.
pub fn mode_temperatures(restricted: &RestrictedSystem, covariance: &DMatrix<f64>) -> DVector<f64> {
    let modes = NormalModes::new(restricted);
    linalg::symmetrize(&modes.mode_covariance(covariance)).symmetric_eigenvalues()
}
