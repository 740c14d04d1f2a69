//! Monte Carlo ensemble of the coupled pair against the exact Gaussian law.
//!
//! `cargo run --release --example ensemble_vs_exact [trajectories] [seed]`

use oscbath::model::{Hamiltonian, PhaseVector, SystemSpec};
use oscbath::sde::{self, IntegratorConfig, Scheme};
use oscbath::structure;

fn main() -> oscbath::Result<()> {
    let mut args = std::env::args().skip(1);
    let trajectories: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(42);

    let h = Hamiltonian::new(nalgebra::dmatrix![2.0, 1.0; 1.0, 2.0])?;
    let spec = SystemSpec::new(h, 1.0, 1.0, 1)?;
    let (_, r) = structure::split(&spec)?;
    let config = IntegratorConfig::evenly_spaced(1e-3, 15.0, 7, Scheme::EulerMaruyama)?;
    config.check_accuracy(&spec)?;

    let start = std::time::Instant::now();
    let stats = sde::simulate_ensemble(&spec, &PhaseVector::zeros(2), &config, trajectories, seed)?;
    let report = sde::empirical_vs_exact(&stats, &spec, &r)?;
    println!("{trajectories} trajectories, seed {seed}, {:.2?}", start.elapsed());
    println!("{:>6} {:>10} {:>9} {:>10} {:>7} {:>9}", "t", "E H emp", "stderr", "E H exact", "z", "cov gap");
    for row in &report.rows {
        println!(
            "{:>6.2} {:>10.5} {:>9.5} {:>10.5} {:>7.2} {:>9.4}",
            row.time, row.emp_mean_energy, row.stderr, row.exact_mean_energy, row.z_score, row.cov_gap
        );
    }
    Ok(())
}
