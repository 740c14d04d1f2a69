//! Exact relaxation of the covariance to the Gibbs limit `sigma^2 U`.
//!
//! Solves the Lyapunov equation both in closed form and by a direct solve,
//! then follows `|C(t) - sigma^2 U| / |sigma^2 U|` and the mean energy.

use oscbath::gauss;
use oscbath::model::{Hamiltonian, PhaseVector, SystemSpec};
use oscbath::structure;

fn main() -> oscbath::Result<()> {
    let spec = SystemSpec::new(Hamiltonian::chain(5, 1.0, 1.0)?, 0.8, 1.2, 1)?;
    let (_, r) = structure::split(&spec)?;

    let closed = gauss::closed_form_u(r.hamiltonian(), spec.alpha())?;
    let direct = gauss::solve_lyapunov_direct(r.a_prime(), r.g_prime())?;
    println!(
        "Lyapunov: residual {:.2e}, closed form vs direct {:.2e}",
        closed.residual(r.a_prime(), r.g_prime()),
        (closed.matrix() - direct.matrix()).norm() / closed.matrix().norm()
    );

    let limit = gauss::stationary_state(&spec, &r)?;
    let limit_energy = gauss::limit_mean_energy(&spec, &r)?;
    let t_conv = gauss::convergence_time(&r)?;
    let mut psi0 = PhaseVector::zeros(spec.dim());
    psi0.q[4] = 1.5;
    println!("spectral abscissa {:.4e}; 20 decay times = {t_conv:.1}", r.spectral_abscissa());
    println!("{:>10} {:>14} {:>12}", "t", "rel distance", "E H");
    for k in 0..=8 {
        let t = t_conv * k as f64 / 8.0;
        let c = gauss::covariance_at(&spec, &r, t)?;
        let dist = (&c.covariance - &limit.covariance).norm() / limit.covariance.norm();
        let e = gauss::mean_energy_at(&spec, &r, &psi0, t)?;
        println!("{t:>10.2} {dist:>14.3e} {e:>12.6}");
    }
    println!("limit sigma^2/(4 alpha) * dim L- = {limit_energy}");
    Ok(())
}
