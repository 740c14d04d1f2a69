//! The `oscbath` experiment runner.
//!
//! Exit codes are a stable contract: 0 success, 2 input error, 3 mode
//! mismatch (e.g. `covariance` without friction), 4 statistical
//! inconsistency (some `|z| > 5`), 5 numerical instability.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss;
use crate::model::{Hamiltonian, SystemSpec};
use crate::sde::{self, IntegratorConfig};
use crate::structure::{self, controllability_test};
use config::Experiment;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MODE: i32 = 3;
pub const EXIT_STATISTICS: i32 = 4;
pub const EXIT_INSTABILITY: i32 = 5;

/// Any `|z|` above this flags the ensemble as inconsistent with the exact law.
pub const Z_LIMIT: f64 = 5.0;

#[derive(Debug, Parser)]
#[command(name = "oscbath", version, about = "Oscillator networks with a single-site heat bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed; overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Krylov dimension, invariant splitting and controllability verdict.
    Analyze(Common),
    /// Exact covariance convergence to the Gibbs limit (requires alpha > 0).
    Covariance(Common),
    /// Monte Carlo ensemble against the exact law.
    Simulate(Common),
    /// Frequency of degenerate Sigma(V) among random couplings.
    Typicality(TypicalityArgs),
    /// Energy growth without friction (requires alpha = 0).
    Growth {
        #[command(flatten)]
        common: Common,
        /// Also run an ensemble and fit its slope.
        #[arg(long)]
        empirical: bool,
    },
}

#[derive(Debug, clap::Args)]
struct TypicalityArgs {
    /// Number of particles N.
    #[arg(long, default_value_t = 4)]
    particles: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distinguished site, 1-based.
    #[arg(long, default_value_t = 1)]
    site: usize,
    /// Shift `c` in `V = G G^T + c I`.
    #[arg(long, default_value_t = 0.1)]
    conditioning: f64,
    /// Also write `typicality.json` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Maps a library error onto the exit-code contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ModeMismatch(_) => EXIT_MODE,
        Error::NotHurwitz { .. }
        | Error::ExpmOverflow(_)
        | Error::StepTooLarge { .. }
        | Error::Diverged { .. }
        | Error::Singular(_) => EXIT_INSTABILITY,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze(c) => cmd_analyze(c, stdout),
        Command::Covariance(c) => cmd_covariance(c, stdout),
        Command::Simulate(c) => cmd_simulate(c, stdout),
        Command::Typicality(t) => cmd_typicality(t, stdout),
        Command::Growth { common, empirical } => cmd_growth(common, *empirical, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if let Error::ModeMismatch(_) = e {
                let hint = if matches!(cli.command, Command::Covariance(_)) {
                    "without friction the energy grows instead; use `oscbath growth`"
                } else {
                    "`growth` is for alpha = 0; use `oscbath covariance` or `oscbath simulate`"
                };
                let _ = writeln!(stderr, "hint: {hint}");
            }
            exit_code(&e)
        }
    }
}

fn load(common: &Common) -> Result<Experiment> {
    let mut exp = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        exp.run.seed = seed;
    }
    if let Some(out) = &common.out {
        exp.output_dir = Some(out.clone());
    }
    Ok(exp)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents.as_bytes()).map_err(io_err(tmp.path()))?;
    tmp.persist(&target).map_err(|e| Error::Io { path: target.clone(), source: e.error })?;
    Ok(target)
}

fn output_dir(exp: &Experiment) -> PathBuf {
    exp.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn describe(spec: &SystemSpec) -> String {
    format!(
        "# N = {}, n = {}, alpha = {}, sigma = {}\n",
        spec.dim(),
        spec.distinguished(),
        spec.alpha(),
        spec.sigma()
    )
}

fn cmd_analyze(common: &Common, out: &mut dyn Write) -> Result<i32> {
    let exp = load(common)?;
    let report = structure::analyze(&exp.spec)?;
    let verdict = if report.degenerate { "degenerate (det Sigma = 0)" } else { "non-degenerate" };
    let mut text = String::new();
    let _ = writeln!(text, "particles N            {}", report.particles);
    let _ = writeln!(text, "distinguished site n   {}", report.distinguished);
    let _ = writeln!(text, "Krylov dimension d     {}", report.krylov_dim);
    let _ = writeln!(text, "dim L-                 {}", report.dim_minus);
    let _ = writeln!(text, "dim L0                 {}", report.dim_zero);
    let _ = writeln!(
        text,
        "det Sigma(V)           {:e} (normalized {:e}): {verdict}",
        report.sigma_det, report.sigma_det_normalized
    );
    let _ = writeln!(text, "spectral abscissa A'   {:e}", report.spectral_abscissa_restricted);
    let _ = writeln!(
        text,
        "rank margin            retained {} / discarded {:e} (tol {:e})",
        report.smallest_retained_residual.map_or("-".to_string(), |r| format!("{r:e}")),
        report.largest_discarded_residual,
        report.rank_tol
    );
    let json = serde_json::to_string(&report).expect("report serializes");
    let _ = writeln!(text, "{json}");
    emit(out, &text)?;
    if let Some(dir) = &exp.output_dir {
        write_atomic(dir, "analyze.json", &format!("{json}\n"))?;
    }
    Ok(EXIT_OK)
}

fn cmd_covariance(common: &Common, out: &mut dyn Write) -> Result<i32> {
    let exp = load(common)?;
    let spec = &exp.spec;
    if spec.alpha() == 0.0 {
        return Err(Error::ModeMismatch("alpha > 0 for covariance convergence (got 0)".into()));
    }
    let (dec, restricted) = structure::split(spec)?;
    let t_conv = gauss::convergence_time(&restricted)?;
    let times = exp.checkpoint_times(exp.t_end_or(t_conv));
    let limit = gauss::stationary_state(spec, &restricted)?;
    let limit_norm = limit.covariance.norm();
    let limit_energy = gauss::limit_mean_energy(spec, &restricted)?;

    let mut csv = describe(spec);
    let _ = writeln!(csv, "# dim L- = {}, dim L0 = {}, 20 decay times = {t_conv}", dec.dim_minus(), dec.dim_zero());
    csv.push_str("t,frobenius_distance_to_limit,mean_energy,limit_energy\n");
    let mut last = f64::NAN;
    for &t in &times {
        let c = gauss::covariance_at(spec, &restricted, t)?;
        let dist = (&c.covariance - &limit.covariance).norm() / limit_norm;
        let energy = gauss::mean_energy_at(spec, &restricted, &exp.psi0, t)?;
        let _ = writeln!(csv, "{t},{dist},{energy},{limit_energy}");
        last = dist;
    }
    let path = write_atomic(&output_dir(&exp), "covariance.csv", &csv)?;
    emit(
        out,
        &format!(
            "wrote {} ({} rows); final relative distance to sigma^2 U = {last:e}; limit energy = {limit_energy}\n",
            path.display(),
            times.len()
        ),
    )?;
    Ok(EXIT_OK)
}

fn integrator(exp: &Experiment, times: &[f64]) -> Result<IntegratorConfig> {
    let t_end = times.iter().copied().fold(exp.t_end(), f64::max);
    let config = IntegratorConfig::new(exp.run.dt, t_end, times, exp.run.scheme)?;
    config.check_accuracy(&exp.spec)?;
    Ok(config)
}

fn fit_footer(label: &str, times: &[f64], values: &[f64], expected: f64) -> String {
    match sde::linear_fit(times, values) {
        Some((slope, intercept)) => format!(
            "# fit {label}: slope = {slope}, intercept = {intercept}, expected slope sigma^2/2 = {expected}, relative error = {}\n",
            ((slope - expected) / expected).abs()
        ),
        None => format!("# fit {label}: not enough distinct times\n"),
    }
}

fn cmd_simulate(common: &Common, out: &mut dyn Write) -> Result<i32> {
    let exp = load(common)?;
    let spec = &exp.spec;
    let times = exp.checkpoint_times(exp.t_end());
    let config = integrator(&exp, &times)?;
    let (_, restricted) = structure::split(spec)?;
    let stats = sde::simulate_ensemble(spec, &exp.psi0, &config, exp.run.trajectories, exp.run.seed)?;
    let report = sde::empirical_vs_exact(&stats, spec, &restricted)?;

    let mut csv = format!("# seed = {}\n", exp.run.seed);
    csv.push_str(&describe(spec));
    let _ = writeln!(
        csv,
        "# scheme = {}, dt = {}, trajectories = {}",
        config.scheme(),
        config.dt(),
        exp.run.trajectories
    );
    csv.push_str("t,emp_mean_energy,stderr,exact_mean_energy,cov_frobenius_gap\n");
    for r in &report.rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.time, r.emp_mean_energy, r.stderr, r.exact_mean_energy, r.cov_gap);
    }
    if spec.alpha() == 0.0 {
        let ts: Vec<f64> = report.rows.iter().map(|r| r.time).collect();
        let es: Vec<f64> = report.rows.iter().map(|r| r.emp_mean_energy).collect();
        csv.push_str(&fit_footer("emp_mean_energy", &ts, &es, 0.5 * spec.sigma().powi(2)));
    }
    let max_z = report.max_abs_z();
    let _ = writeln!(csv, "# max |z| = {max_z}");
    let path = write_atomic(&output_dir(&exp), "simulate.csv", &csv)?;

    let last = report.rows.last().expect("at least one checkpoint");
    emit(
        out,
        &format!(
            "wrote {}; seed {}; final t = {}: energy {} +- {} (exact {}), z = {:.3}, covariance gap {:.4}; max |z| = {max_z:.3}\n",
            path.display(),
            exp.run.seed,
            last.time,
            last.emp_mean_energy,
            last.stderr,
            last.exact_mean_energy,
            last.z_score,
            last.cov_gap
        ),
    )?;
    if max_z > Z_LIMIT {
        emit(out, &format!("statistical inconsistency: |z| = {max_z:.3} exceeds {Z_LIMIT}\n"))?;
        return Ok(EXIT_STATISTICS);
    }
    Ok(EXIT_OK)
}

fn cmd_growth(common: &Common, empirical_flag: bool, out: &mut dyn Write) -> Result<i32> {
    let exp = load(common)?;
    let spec = &exp.spec;
    if spec.alpha() != 0.0 {
        return Err(Error::ModeMismatch(format!("alpha = 0 for energy growth (got {})", spec.alpha())));
    }
    let times = exp.checkpoint_times(exp.t_end());
    let h = spec.hamiltonian();
    let rate = 0.5 * spec.sigma().powi(2);

    // deterministic free flow plus the zero-start fluctuations; cross terms vanish in mean
    let mut exact = Vec::with_capacity(times.len());
    for &t in &times {
        let growth = gauss::energy_growth_alpha0(spec, t)?;
        let mean = gauss::mean_at(spec, &exp.psi0, t)?;
        let et = h.kinetic(&mean)? + growth.kinetic;
        let eu = h.potential(&mean)? + growth.potential;
        let eh = gauss::expected_energy_alpha0(spec, &exp.psi0, t)?;
        exact.push((eh, et, eu));
    }

    let empirical = if empirical_flag || exp.run.empirical {
        let config = integrator(&exp, &times)?;
        let stats = sde::simulate_ensemble(spec, &exp.psi0, &config, exp.run.trajectories, exp.run.seed)?;
        Some(stats)
    } else {
        None
    };

    let mut csv = format!("# seed = {}\n", exp.run.seed);
    csv.push_str(&describe(spec));
    if let Some(stats) = &empirical {
        let _ = writeln!(csv, "# scheme = {}, dt = {}, trajectories = {}", stats.scheme, stats.dt, stats.trajectories);
        csv.push_str("t,exact_EH,exact_ET,exact_EU,emp_EH,emp_stderr\n");
    } else {
        csv.push_str("t,exact_EH,exact_ET,exact_EU\n");
    }
    let mut max_z: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let (eh, et, eu) = exact[i];
        let _ = write!(csv, "{t},{eh},{et},{eu}");
        if let Some(stats) = &empirical {
            let cp = &stats.checkpoints[i];
            let _ = write!(csv, ",{},{}", cp.mean_energy, cp.energy_stderr);
            let gap = cp.mean_energy - eh;
            if cp.energy_stderr > 0.0 {
                max_z = max_z.max((gap / cp.energy_stderr).abs());
            } else if gap != 0.0 {
                max_z = f64::INFINITY;
            }
        }
        csv.push('\n');
    }
    let eh: Vec<f64> = exact.iter().map(|e| e.0).collect();
    csv.push_str(&fit_footer("exact_EH", &times, &eh, rate));
    let mut summary = String::new();
    if let Some(stats) = &empirical {
        let emp: Vec<f64> = stats.checkpoints.iter().map(|c| c.mean_energy).collect();
        let ts: Vec<f64> = stats.checkpoints.iter().map(|c| c.time).collect();
        let footer = fit_footer("emp_EH", &ts, &emp, rate);
        csv.push_str(&footer);
        let _ = writeln!(csv, "# max |z| = {max_z}");
        summary.push_str(footer.trim_start_matches("# "));
    }
    let path = write_atomic(&output_dir(&exp), "growth.csv", &csv)?;
    emit(out, &format!("wrote {} ({} rows); exact slope sigma^2/2 = {rate}\n{summary}", path.display(), times.len()))?;
    if max_z > Z_LIMIT {
        emit(out, &format!("statistical inconsistency: |z| = {max_z:.3} exceeds {Z_LIMIT}\n"))?;
        return Ok(EXIT_STATISTICS);
    }
    Ok(EXIT_OK)
}

/// Outcome of the typicality experiment.
#[derive(Debug, Clone, Serialize)]
pub struct TypicalityReport {
    pub particles: usize,
    pub site: usize,
    pub samples: usize,
    pub seed: u64,
    pub degenerate: usize,
    pub fraction: f64,
    /// Smallest normalized `|det Sigma|` among the random samples.
    pub min_normalized_det: f64,
    /// `(label, flagged degenerate)` for couplings known to be degenerate.
    pub structured: Vec<(String, bool)>,
}

impl TypicalityReport {
    pub fn structured_all_flagged(&self) -> bool {
        self.structured.iter().all(|(_, flagged)| *flagged)
    }
}

/// Per-sample seed; decorrelates neighbouring root seeds.
fn sample_seed(root: u64, index: u64) -> u64 {
    root.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17)
}

/// Draws `samples` random SPD couplings and counts degenerate `Sigma(V)`;
/// also checks the identity and diagonal couplings, which must be flagged.
pub fn typicality(particles: usize, site: usize, samples: usize, seed: u64, conditioning: f64) -> Result<TypicalityReport> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    if site == 0 || site > particles {
        return Err(Error::IndexOutOfRange { index: site, dim: particles });
    }
    let mut degenerate = 0;
    let mut min_det = f64::INFINITY;
    for i in 0..samples {
        let h = Hamiltonian::random_spd(particles, sample_seed(seed, i as u64), conditioning)?;
        let test = controllability_test(&h, site)?;
        degenerate += usize::from(test.degenerate);
        min_det = min_det.min(test.normalized);
    }
    let mut structured = Vec::new();
    let identity = Hamiltonian::new(nalgebra::DMatrix::identity(particles, particles))?;
    structured.push(("V = I".to_string(), controllability_test(&identity, site)?.degenerate));
    let diag = Hamiltonian::new(nalgebra::DMatrix::from_diagonal(&DVector::from_fn(particles, |i, _| (i + 1) as f64)))?;
    for n in 1..=particles {
        structured.push((format!("V = diag(1..{particles}), n = {n}"), controllability_test(&diag, n)?.degenerate));
    }
    Ok(TypicalityReport {
        particles,
        site,
        samples,
        seed,
        degenerate,
        fraction: degenerate as f64 / samples as f64,
        min_normalized_det: min_det,
        structured,
    })
}

fn cmd_typicality(args: &TypicalityArgs, out: &mut dyn Write) -> Result<i32> {
    let report = typicality(args.particles, args.site, args.samples, args.seed, args.conditioning)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "random SPD couplings: N = {}, n = {}, samples = {}, seed = {}",
        report.particles, report.site, report.samples, report.seed
    );
    let _ = writeln!(text, "degenerate            {} (fraction {})", report.degenerate, report.fraction);
    let _ = writeln!(text, "min normalized |det|  {:e}", report.min_normalized_det);
    for (label, flagged) in &report.structured {
        let _ = writeln!(text, "{label:<28} {}", if *flagged { "degenerate" } else { "NOT flagged" });
    }
    let json = serde_json::to_string(&report).expect("report serializes");
    let _ = writeln!(text, "{json}");
    emit(out, &text)?;
    if let Some(dir) = &args.out {
        write_atomic(dir, "typicality.json", &format!("{json}\n"))?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::ModeMismatch("x".into())), EXIT_MODE);
        assert_eq!(exit_code(&Error::ExpmOverflow(1.0)), EXIT_INSTABILITY);
        assert_eq!(exit_code(&Error::Diverged { trajectory: 0, step: 1, norm: 1e13 }), EXIT_INSTABILITY);
        assert_eq!(exit_code(&Error::NotPositiveDefinite), EXIT_INPUT);
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_INPUT);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), "a.csv", "one\n").unwrap();
        write_atomic(dir.path(), "a.csv", "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn typicality_small() {
        let r = typicality(3, 2, 50, 1, 0.1).unwrap();
        assert_eq!(r.degenerate, 0);
        assert!(r.min_normalized_det > 0.0);
        assert_eq!(r.structured.len(), 4);
        assert!(r.structured_all_flagged());
        assert!(typicality(3, 4, 10, 1, 0.1).is_err());
        assert!(typicality(3, 1, 0, 1, 0.1).is_err());
    }

    #[test]
    fn sample_seeds_distinct() {
        let mut seen = std::collections::HashSet::new();
        for root in 0..20 {
            for i in 0..200 {
                assert!(seen.insert(sample_seed(root, i)));
            }
        }
    }

    #[test]
    fn usage_errors_exit_2_and_help_exits_0() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["oscbath", "bogus"], &mut o, &mut e), EXIT_INPUT);
        assert_eq!(run(["oscbath", "--help"], &mut o, &mut e), EXIT_OK);
        assert!(String::from_utf8(o).unwrap().contains("typicality"));
    }
}
