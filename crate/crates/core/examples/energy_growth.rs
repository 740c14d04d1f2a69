//! Without friction the bath pumps energy in at rate `sigma^2 / 2`,
//! whatever the coupling.

use oscbath::gauss;
use oscbath::model::{Hamiltonian, PhaseVector, SystemSpec};
use oscbath::sde::{self, IntegratorConfig, Scheme};

fn main() -> oscbath::Result<()> {
    let spec = SystemSpec::new(Hamiltonian::random_spd(4, 3, 0.2)?, 0.0, 1.0, 2)?;
    let times: Vec<f64> = (0..=6).map(|k| 5.0 + 2.5 * k as f64).collect();

    println!("{:>6} {:>10} {:>10} {:>10}", "t", "E T", "E U", "E H");
    for &t in &times {
        let g = gauss::energy_growth_alpha0(&spec, t)?;
        println!("{t:>6.1} {:>10.5} {:>10.5} {:>10.5}", g.kinetic, g.potential, g.total);
    }

    // symplectic stepping keeps the deterministic part of the energy bounded
    let config = IntegratorConfig::new(1e-3, 20.0, &times, Scheme::SemiImplicit)?;
    config.check_accuracy(&spec)?;
    let stats = sde::simulate_ensemble(&spec, &PhaseVector::zeros(4), &config, 10_000, 6)?;
    let ts: Vec<f64> = stats.checkpoints.iter().map(|c| c.time).collect();
    let es: Vec<f64> = stats.checkpoints.iter().map(|c| c.mean_energy).collect();
    let (slope, intercept) = sde::linear_fit(&ts, &es).expect("distinct times");
    println!("empirical slope {slope:.4} (exact {}), intercept {intercept:.4}", 0.5 * spec.sigma().powi(2));
    Ok(())
}
