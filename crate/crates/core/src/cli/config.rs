//! Experiment configuration files.
//!
//! ```toml
//! [system]
//! v = [[2.0, 1.0], [1.0, 2.0]]   # inline, N <= 4; otherwise v_file = "chain8.txt"
//! alpha = 1.0
//! sigma = 1.0
//! n = 1                            # distinguished site, 1-based
//! psi0 = [0.0, 0.0, 0.0, 0.0]      # optional, (q, p) stacked
//!
//! [run]
//! scheme = "euler-maruyama"
//! dt = 1e-3
//! t_end = 15.0
//! checkpoint_count = 16            # or: checkpoints = [0.0, 5.0, 15.0]
//! trajectories = 2000
//! seed = 7
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{read_matrix_file, Hamiltonian, PhaseVector, SystemSpec};
use crate::sde::Scheme;

/// Largest `N` for which `V` may be written inline.
pub const INLINE_MAX: usize = 4;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub v: Option<Vec<Vec<f64>>>,
    pub v_file: Option<PathBuf>,
    pub alpha: f64,
    pub sigma: f64,
    pub n: usize,
    pub psi0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Defaults to 20 decay times for `covariance`, 15 otherwise.
    pub t_end: Option<f64>,
    pub checkpoints: Option<Vec<f64>>,
    pub checkpoint_count: Option<usize>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    /// `growth` only: also run an ensemble.
    #[serde(default)]
    pub empirical: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_trajectories() -> usize {
    2000
}

const DEFAULT_T_END: f64 = 15.0;
const DEFAULT_CHECKPOINTS: usize = 16;

impl Default for RunSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            dt: default_dt(),
            t_end: None,
            checkpoints: None,
            checkpoint_count: None,
            trajectories: default_trajectories(),
            seed: 0,
            empirical: false,
        }
    }
}

/// A validated configuration with the instance built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: SystemSpec,
    pub psi0: PhaseVector,
    pub run: RunSection,
    /// Output directory, already resolved against the config location.
    pub output_dir: Option<PathBuf>,
}

impl Experiment {
    /// Requested output times: explicit list, or `count` evenly spaced
    /// points on `[0, t_end]`.
    pub fn checkpoint_times(&self, t_end: f64) -> Vec<f64> {
        if let Some(times) = &self.run.checkpoints {
            return times.clone();
        }
        let count = self.run.checkpoint_count.unwrap_or(DEFAULT_CHECKPOINTS).max(2);
        (0..count).map(|i| t_end * i as f64 / (count - 1) as f64).collect()
    }

    /// `t_end` from the config, or the last explicit checkpoint, or `fallback`.
    pub fn t_end_or(&self, fallback: f64) -> f64 {
        self.run
            .t_end
            .or_else(|| self.run.checkpoints.as_ref().and_then(|c| c.iter().copied().reduce(f64::max)))
            .unwrap_or(fallback)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end_or(DEFAULT_T_END)
    }
}

pub fn load(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.span().map(|s| line_of(&text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    build(config, base)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Validates `config`, reading any matrix file relative to `base`.
pub fn build(config: ExperimentConfig, base: &Path) -> Result<Experiment> {
    let sys = &config.system;
    let v = match (&sys.v, &sys.v_file) {
        (Some(rows), None) => inline_matrix(rows)?,
        (None, Some(file)) => read_matrix_file(&base.join(file))?,
        (Some(_), Some(_)) => return Err(Error::invalid("[system] sets both v and v_file")),
        (None, None) => return Err(Error::invalid("[system] needs v or v_file")),
    };
    let spec = SystemSpec::new(Hamiltonian::new(v)?, sys.alpha, sys.sigma, sys.n)?;
    let psi0 = match &sys.psi0 {
        Some(x) => {
            if x.len() != 2 * spec.dim() {
                return Err(Error::DimensionMismatch { expected: 2 * spec.dim(), found: x.len() });
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid("psi0 has non-finite entries"));
            }
            PhaseVector::from_stacked(&DVector::from_column_slice(x))?
        }
        None => PhaseVector::zeros(spec.dim()),
    };
    validate_run(&config.run)?;
    Ok(Experiment {
        spec,
        psi0,
        run: config.run,
        output_dir: config.output.dir.map(|d| base.join(d)),
    })
}

fn inline_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::invalid("inline v is empty"));
    }
    if n > INLINE_MAX {
        return Err(Error::invalid(format!(
            "inline v is limited to N <= {INLINE_MAX} (got N = {n}); use v_file"
        )));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::invalid(format!("inline v row {} has {} entries, expected {n}", bad + 1, rows[bad].len())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn validate_run(run: &RunSection) -> Result<()> {
    if !(run.dt > 0.0 && run.dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be positive, got {}", run.dt)));
    }
    if let Some(t) = run.t_end {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("t_end must be positive, got {t}")));
        }
    }
    if run.checkpoints.is_some() && run.checkpoint_count.is_some() {
        return Err(Error::invalid("set either checkpoints or checkpoint_count, not both"));
    }
    if let Some(times) = &run.checkpoints {
        if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::invalid("checkpoints must be a non-empty list of finite times >= 0"));
        }
        if let Some(t_end) = run.t_end {
            if times.iter().any(|&t| t > t_end) {
                return Err(Error::invalid("checkpoint beyond t_end"));
            }
        }
    }
    if run.checkpoint_count.is_some_and(|c| c < 2) {
        return Err(Error::invalid("checkpoint_count must be at least 2"));
    }
    if run.trajectories < 2 {
        return Err(Error::invalid("trajectories must be at least 2"));
    }
    Ok(())
}
