//! Empirical ensemble statistics against the exact Gaussian law.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::EnsembleStats;
use crate::error::{Error, Result};
use crate::gauss::{self, NormalModes};
use crate::linalg;
use crate::model::{PhaseVector, SystemSpec};
use crate::structure::RestrictedSystem;

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointComparison {
    pub time: f64,
    pub emp_mean_energy: f64,
    pub stderr: f64,
    pub exact_mean_energy: f64,
    /// `(emp - exact) / stderr`; zero when both the deviation and the
    /// standard error vanish.
    pub z_score: f64,
    pub cov_gap_abs: f64,
    /// Frobenius gap relative to the exact covariance norm, or the absolute
    /// gap while the exact covariance is still zero.
    pub cov_gap: f64,
    /// Largest `|P0 (mean_emp - mean_exact)|` component.
    pub l0_mean_deviation: f64,
    /// Largest deviation of the `L0` mean in units of its standard error
    /// (`0` when there is no spread at all).
    pub l0_mean_z: f64,
    /// `tr(P0 C_emp P0)`, the spread that leaked into `L0`.
    pub l0_variance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<CheckpointComparison>,
    pub trajectories: usize,
    pub seed: u64,
}

impl ComparisonReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares every checkpoint of `stats` with the exact mean energy, exact
/// covariance and deterministic `L0` motion. Works for any `alpha`: with
/// dissipation the exact covariance comes from the Lyapunov route, without it
/// from the block-exponential integral.
pub fn empirical_vs_exact(
    stats: &EnsembleStats,
    spec: &SystemSpec,
    restricted: &RestrictedSystem,
) -> Result<ComparisonReport> {
    let dim = 2 * spec.dim();
    if stats.initial.len() != dim || restricted.embedding().nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: stats.initial.len() });
    }
    let psi0 = PhaseVector::from_stacked(&stats.initial)?;
    let p = restricted.embedding();
    let p0 = DMatrix::identity(dim, dim) - p * p.transpose();

    let rows = stats
        .checkpoints
        .iter()
        .map(|cp| {
            let t = cp.time;
            let (exact_energy, exact_cov) = if spec.alpha() > 0.0 {
                let cov = gauss::covariance_at(spec, restricted, t)?.embed(restricted).covariance;
                (gauss::mean_energy_at(spec, restricted, &psi0, t)?, cov)
            } else {
                (gauss::expected_energy_alpha0(spec, &psi0, t)?, gauss::full_covariance_at(spec, t)?)
            };
            let exact_mean = gauss::mean_at(spec, &psi0, t)?.to_stacked();
            let cov_gap_abs = (&cp.covariance - &exact_cov).norm();
            let exact_norm = exact_cov.norm();
            let cov_gap = if exact_norm > 0.0 { cov_gap_abs / exact_norm } else { cov_gap_abs };

            let dev = &p0 * (&cp.mean - &exact_mean);
            let l0_cov = &p0 * &cp.covariance * &p0;
            let m = stats.trajectories as f64;
            let l0_mean_z = dev
                .iter()
                .zip(l0_cov.diagonal().iter())
                .map(|(d, v)| ratio(d.abs(), (v.max(0.0) / m).sqrt()))
                .fold(0.0, f64::max);
            Ok(CheckpointComparison {
                time: t,
                emp_mean_energy: cp.mean_energy,
                stderr: cp.energy_stderr,
                exact_mean_energy: exact_energy,
                z_score: ratio(cp.mean_energy - exact_energy, cp.energy_stderr),
                cov_gap_abs,
                cov_gap,
                l0_mean_deviation: dev.amax(),
                l0_mean_z,
                l0_variance: l0_cov.trace(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport { rows, trajectories: stats.trajectories, seed: stats.seed })
}

/// Equipartition and Gaussianity checks on near-stationary samples, in the
/// normal-mode coordinates of the restricted system.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsDiagnostics {
    /// `sigma^2 / (2 alpha)`.
    pub target_variance: f64,
    pub mode_variances: Vec<f64>,
    pub mode_skewness: Vec<f64>,
}

impl GibbsDiagnostics {
    pub fn max_relative_variance_error(&self) -> f64 {
        self.mode_variances
            .iter()
            .map(|v| (v - self.target_variance).abs() / self.target_variance)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_skewness(&self) -> f64 {
        self.mode_skewness.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }
}

pub fn gibbs_diagnostics(
    samples: &[DVector<f64>],
    spec: &SystemSpec,
    restricted: &RestrictedSystem,
) -> Result<GibbsDiagnostics> {
    if spec.alpha() <= 0.0 {
        return Err(Error::ModeMismatch("alpha > 0 for a Gibbs limit".into()));
    }
    if samples.len() < 3 {
        return Err(Error::invalid("need at least 3 samples"));
    }
    let modes = NormalModes::new(restricted);
    let dim = 2 * restricted.dim();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); dim];
    for x in samples {
        let y = modes.coordinates(&restricted.to_restricted(x));
        for (col, v) in columns.iter_mut().zip(y.iter()) {
            col.push(*v);
        }
    }
    let n = samples.len() as f64;
    let mode_variances = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n;
            c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect();
    let mode_skewness = columns.iter().map(|c| linalg::skewness(c)).collect();
    Ok(GibbsDiagnostics {
        target_variance: spec.sigma().powi(2) / (2.0 * spec.alpha()),
        mode_variances,
        mode_skewness,
    })
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
