//! Monte Carlo path simulation of the thermostatted network and ensemble
//! statistics. This is an independent empirical check of the exact results
//! in [`crate::gauss`]; it never samples the exact Gaussian law directly.

mod compare;
mod rng;
mod stats;

pub use compare::{
    empirical_vs_exact, gibbs_diagnostics, linear_fit, CheckpointComparison, ComparisonReport, GibbsDiagnostics,
};
pub use rng::TrajectoryRng;
pub use stats::{ScalarMoments, VectorMoments};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussianState;
use crate::model::{PhaseVector, SystemSpec};

/// States whose norm exceeds this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;
/// Required bound on `dt * rho(A)`.
pub const ACCURACY_LIMIT: f64 = 0.1;
/// Trajectories per work unit; fixes the reduction tree independently of the
/// number of worker threads.
const BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `psi <- psi + A psi dt + sigma g dW`.
    #[default]
    EulerMaruyama,
    /// Momenta first, then positions with the updated momenta. Symplectic
    /// Euler when `alpha = sigma = 0`.
    SemiImplicit,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::EulerMaruyama => "euler-maruyama",
            Scheme::SemiImplicit => "semi-implicit",
        })
    }
}

/// A requested output time snapped onto the step grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub requested: f64,
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    dt: f64,
    t_end: f64,
    steps: usize,
    checkpoints: Vec<Checkpoint>,
    scheme: Scheme,
}

impl IntegratorConfig {
    /// Checkpoints must be ascending and lie in `[0, t_end]`; an empty list
    /// means `[t_end]`. Each is snapped to the nearest multiple of `dt`.
    pub fn new(dt: f64, t_end: f64, checkpoints: &[f64], scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
        }
        let requested: Vec<f64> = if checkpoints.is_empty() { vec![t_end] } else { checkpoints.to_vec() };
        if requested.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("checkpoints must be in ascending order"));
        }
        if let Some(bad) = requested.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
            return Err(Error::invalid(format!("checkpoint {bad} outside [0, {t_end}]")));
        }
        let steps = (t_end / dt).round() as usize;
        let checkpoints = requested
            .into_iter()
            .map(|t| {
                let step = ((t / dt).round() as usize).min(steps);
                Checkpoint { requested: t, step, time: step as f64 * dt }
            })
            .collect();
        Ok(Self { dt, t_end, steps, checkpoints, scheme })
    }

    /// `count` checkpoints evenly spaced on `[0, t_end]`, both ends included.
    pub fn evenly_spaced(dt: f64, t_end: f64, count: usize, scheme: Scheme) -> Result<Self> {
        let count = count.max(2);
        let times: Vec<f64> = (0..count).map(|i| t_end * i as f64 / (count - 1) as f64).collect();
        Self::new(dt, t_end, &times, scheme)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    /// Largest distance between a requested checkpoint and its snapped time.
    pub fn max_snap(&self) -> f64 {
        self.checkpoints.iter().map(|c| (c.time - c.requested).abs()).fold(0.0, f64::max)
    }

    /// Rejects step sizes with `dt * rho(A) >= 0.1`.
    pub fn check_accuracy(&self, spec: &SystemSpec) -> Result<()> {
        let product = self.dt * spec.drift().spectral_radius();
        if product >= ACCURACY_LIMIT {
            return Err(Error::StepTooLarge { dt: self.dt, product, limit: ACCURACY_LIMIT });
        }
        Ok(())
    }
}

/// Allocation-free stepping on a stacked `[q | p]` slice.
#[derive(Debug, Clone)]
struct Stepper {
    n: usize,
    v: Vec<f64>,
    site: usize,
    alpha: f64,
    sigma: f64,
    dt: f64,
    scheme: Scheme,
    force: Vec<f64>,
}

impl Stepper {
    fn new(spec: &SystemSpec, dt: f64, scheme: Scheme) -> Self {
        let n = spec.dim();
        let v = spec.hamiltonian().coupling();
        let v = (0..n * n).map(|k| v[(k / n, k % n)]).collect();
        Self { n, v, site: spec.site(), alpha: spec.alpha(), sigma: spec.sigma(), dt, scheme, force: vec![0.0; n] }
    }

    /// One step with Brownian increment `dw`.
    #[inline]
    fn advance(&mut self, x: &mut [f64], dw: f64) {
        let n = self.n;
        let (q, p) = x.split_at_mut(n);
        for (i, f) in self.force.iter_mut().enumerate() {
            let row = &self.v[i * n..(i + 1) * n];
            *f = -row.iter().zip(q.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        self.force[self.site] -= self.alpha * p[self.site];
        match self.scheme {
            Scheme::EulerMaruyama => {
                for i in 0..n {
                    q[i] += self.dt * p[i];
                    p[i] += self.dt * self.force[i];
                }
            }
            Scheme::SemiImplicit => {
                for (pi, fi) in p.iter_mut().zip(&self.force) {
                    *pi += self.dt * fi;
                }
                p[self.site] += self.sigma * dw;
                for (qi, pi) in q.iter_mut().zip(p.iter()) {
                    *qi += self.dt * pi;
                }
                return;
            }
        }
        p[self.site] += self.sigma * dw;
    }
}

/// Advances `psi` by one step with Brownian increment `dw ~ N(0, dt)`.
pub fn step(spec: &SystemSpec, psi: &PhaseVector, dt: f64, dw: f64, scheme: Scheme) -> Result<PhaseVector> {
    if psi.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: psi.dim() });
    }
    let mut stepper = Stepper::new(spec, dt, scheme);
    let mut x = psi.to_stacked();
    stepper.advance(x.as_mut_slice(), dw);
    let norm = x.norm();
    if !norm.is_finite() {
        return Err(Error::Diverged { trajectory: 0, step: 1, norm });
    }
    PhaseVector::from_stacked(&x)
}

/// Exact mean and covariance of the discrete scheme after `steps` steps from
/// a deterministic start, by propagating the one-step affine map.
pub fn scheme_moments(
    spec: &SystemSpec,
    scheme: Scheme,
    dt: f64,
    psi0: &PhaseVector,
    steps: usize,
) -> Result<GaussianState> {
    let dim = 2 * spec.dim();
    let mut stepper = Stepper::new(spec, dt, scheme);
    let mut map = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        stepper.advance(&mut e, 0.0);
        map.set_column(j, &DVector::from_vec(e));
    }
    let mut b = vec![0.0; dim];
    stepper.advance(&mut b, 1.0);
    let b = DVector::from_vec(b);
    let noise = &b * b.transpose() * dt;

    let mut mean = psi0.to_stacked();
    let mut cov = DMatrix::zeros(dim, dim);
    for _ in 0..steps {
        mean = &map * mean;
        cov = &map * cov * map.transpose() + &noise;
    }
    Ok(GaussianState { mean, covariance: cov, time: steps as f64 * dt })
}

/// Ensemble moments at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointStats {
    pub time: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub mean_stderr: DVector<f64>,
    pub mean_energy: f64,
    pub energy_variance: f64,
    pub energy_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub checkpoints: Vec<CheckpointStats>,
    pub trajectories: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub dt: f64,
    pub initial: DVector<f64>,
}

#[derive(Clone)]
struct Partial {
    states: Vec<VectorMoments>,
    energies: Vec<ScalarMoments>,
    finals: Vec<DVector<f64>>,
}

impl Partial {
    fn new(dim: usize, checkpoints: usize) -> Self {
        Self {
            states: vec![VectorMoments::new(dim); checkpoints],
            energies: vec![ScalarMoments::default(); checkpoints],
            finals: Vec::new(),
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        for (a, b) in self.states.iter_mut().zip(&other.states) {
            a.merge(b);
        }
        for (a, b) in self.energies.iter_mut().zip(&other.energies) {
            a.merge(b);
        }
        self.finals.extend(other.finals);
        self
    }
}

/// Fixed-shape pairwise reduction: adjacent blocks merge level by level.
fn tree_merge(mut parts: Vec<Partial>) -> Partial {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one block")
}

fn run_block(
    spec: &SystemSpec,
    psi0: &DVector<f64>,
    config: &IntegratorConfig,
    range: std::ops::Range<usize>,
    seed: u64,
    record: bool,
) -> Result<Partial> {
    let h = spec.hamiltonian();
    let dim = psi0.len();
    let mut part = Partial::new(dim, config.checkpoints.len());
    let mut stepper = Stepper::new(spec, config.dt, config.scheme);
    let sqrt_dt = config.dt.sqrt();
    let limit = DIVERGENCE_NORM * DIVERGENCE_NORM;

    for trajectory in range {
        let mut rng = TrajectoryRng::new(seed, trajectory as u64);
        let mut x = psi0.clone();
        let mut next = 0;
        let record_at = |x: &DVector<f64>, step: usize, next: &mut usize, part: &mut Partial| {
            while *next < config.checkpoints.len() && config.checkpoints[*next].step == step {
                part.states[*next].push(x);
                part.energies[*next].push(h.energy_of(x));
                *next += 1;
            }
        };
        record_at(&x, 0, &mut next, &mut part);
        for step in 1..=config.steps {
            let dw = sqrt_dt * rng.standard_normal();
            stepper.advance(x.as_mut_slice(), dw);
            let norm_sq = x.norm_squared();
            if norm_sq.is_nan() || norm_sq > limit {
                return Err(Error::Diverged { trajectory, step, norm: norm_sq.sqrt() });
            }
            record_at(&x, step, &mut next, &mut part);
        }
        if record {
            part.finals.push(x);
        }
    }
    Ok(part)
}

fn run(
    spec: &SystemSpec,
    psi0: &PhaseVector,
    config: &IntegratorConfig,
    trajectories: usize,
    seed: u64,
    record: bool,
) -> Result<(EnsembleStats, Vec<DVector<f64>>)> {
    if trajectories < 2 {
        return Err(Error::invalid(format!("need at least 2 trajectories, got {trajectories}")));
    }
    if psi0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: psi0.dim() });
    }
    config.check_accuracy(spec)?;
    let x0 = psi0.to_stacked();
    let blocks: Vec<Result<Partial>> = (0..trajectories.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let range = b * BLOCK..((b + 1) * BLOCK).min(trajectories);
            run_block(spec, &x0, config, range, seed, record)
        })
        .collect();
    let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
    let merged = tree_merge(blocks);

    let m = trajectories as f64;
    let checkpoints = config
        .checkpoints
        .iter()
        .zip(merged.states.iter().zip(&merged.energies))
        .map(|(cp, (state, energy))| {
            let covariance = state.covariance();
            let mean_stderr = covariance.diagonal().map(|v| (v.max(0.0) / m).sqrt());
            CheckpointStats {
                time: cp.time,
                mean: state.mean().clone(),
                covariance,
                mean_stderr,
                mean_energy: energy.mean(),
                energy_variance: energy.variance(),
                energy_stderr: energy.std_error(),
            }
        })
        .collect();
    let stats = EnsembleStats { checkpoints, trajectories, seed, scheme: config.scheme, dt: config.dt, initial: x0 };
    Ok((stats, merged.finals))
}

/// Runs `trajectories` independent paths from `psi0`. Trajectory `i` draws
/// from stream `i` of the root `seed`; results are bitwise reproducible for a
/// given `(seed, trajectories, config)` regardless of thread count.
pub fn simulate_ensemble(
    spec: &SystemSpec,
    psi0: &PhaseVector,
    config: &IntegratorConfig,
    trajectories: usize,
    seed: u64,
) -> Result<EnsembleStats> {
    run(spec, psi0, config, trajectories, seed, false).map(|(s, _)| s)
}

/// As [`simulate_ensemble`], also returning every trajectory's final state in
/// trajectory order.
pub fn simulate_ensemble_recording(
    spec: &SystemSpec,
    psi0: &PhaseVector,
    config: &IntegratorConfig,
    trajectories: usize,
    seed: u64,
) -> Result<(EnsembleStats, Vec<DVector<f64>>)> {
    run(spec, psi0, config, trajectories, seed, true)
}
