//! How much of phase space does a single-site heat bath reach?
//!
//! Prints the Krylov dimension, the split `L- ⊕ L0` and the controllability
//! verdict for a few couplings, and checks that both parts are invariant.

use nalgebra::{dmatrix, DMatrix, DVector};
use oscbath::model::{Hamiltonian, SystemSpec};
use oscbath::structure;

fn main() -> oscbath::Result<()> {
    let cases = [
        ("coupled pair", Hamiltonian::new(dmatrix![2.0, 1.0; 1.0, 2.0])?, 1),
        ("identity, N = 3", Hamiltonian::new(DMatrix::identity(3, 3))?, 2),
        ("diag(1, 2, 3)", Hamiltonian::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])))?, 1),
        ("chain N = 8, end site", Hamiltonian::chain(8, 1.0, 0.5)?, 1),
        ("chain N = 7, middle site", Hamiltonian::chain(7, 1.0, 0.5)?, 4),
        ("random SPD N = 6", Hamiltonian::random_spd(6, 11, 0.1)?, 3),
    ];
    println!("{:<26} {:>3} {:>3} {:>6} {:>6}  {:<14} {:>11}", "coupling", "N", "d", "dim L-", "dim L0", "Sigma(V)", "|P0 A P-|");
    for (label, h, n) in cases {
        let spec = SystemSpec::new(h, 1.0, 1.0, n)?;
        let report = structure::analyze(&spec)?;
        let dec = structure::build_decomposition(spec.hamiltonian(), n, None)?;
        let a = spec.drift().matrix().clone();
        let leak = (dec.projector_zero() * &a * dec.projector_minus()).norm() / a.norm();
        println!(
            "{:<26} {:>3} {:>3} {:>6} {:>6}  {:<14} {:>11.2e}",
            label,
            report.particles,
            report.krylov_dim,
            report.dim_minus,
            report.dim_zero,
            if report.degenerate { "degenerate" } else { "full rank" },
            leak
        );
    }
    Ok(())
}
