//! Continuous Lyapunov equation `A U + U A^T = -g g^T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Hamiltonian;

/// Spectral abscissa must not exceed `-HURWITZ_TOL * ||A||_F`.
pub const HURWITZ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSolution {
    u: DMatrix<f64>,
}

impl LyapunovSolution {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.u
    }

    /// `||A U + U A^T + g g^T||_F`.
    pub fn residual(&self, a: &DMatrix<f64>, g: &DVector<f64>) -> f64 {
        lyapunov_residual(a, g, &self.u)
    }
}

pub fn lyapunov_residual(a: &DMatrix<f64>, g: &DVector<f64>, u: &DMatrix<f64>) -> f64 {
    (a * u + u * a.transpose() + g * g.transpose()).norm()
}

pub fn check_hurwitz(a: &DMatrix<f64>) -> Result<f64> {
    let abscissa = linalg::spectral_abscissa(a);
    let threshold = -HURWITZ_TOL * a.norm();
    if abscissa > threshold {
        return Err(Error::NotHurwitz { abscissa, threshold });
    }
    Ok(abscissa)
}

/// Solves by vectorization, `(I ⊗ A + A ⊗ I) vec U = -vec(g g^T)`, with a
/// dense LU factorization. Intended for `dim A <= 64`.
pub fn solve_lyapunov_direct(a: &DMatrix<f64>, g: &DVector<f64>) -> Result<LyapunovSolution> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(Error::invalid("Lyapunov operator must be square"));
    }
    if g.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: g.len() });
    }
    check_hurwitz(a)?;

    // column-major vec: vec(A U) = (I ⊗ A) vec U, vec(U A^T) = (A ⊗ I) vec U
    let id = DMatrix::<f64>::identity(m, m);
    let op = id.kronecker(a) + a.kronecker(&id);
    let rhs = -(g * g.transpose());
    let rhs = DMatrix::from_column_slice(m * m, 1, rhs.as_slice());
    let x = linalg::solve(op, &rhs, "Lyapunov operator")?;
    let u = DMatrix::from_column_slice(m, m, x.as_slice());
    Ok(LyapunovSolution { u: linalg::symmetrize(&u) })
}

/// `U = diag(V^{-1}, E) / (2 alpha)`; solves the equation for every choice of
/// distinguished site.
pub fn closed_form_u(h: &Hamiltonian, alpha: f64) -> Result<LyapunovSolution> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::ModeMismatch(format!("alpha > 0 for the stationary solution (got {alpha})")));
    }
    let n = h.dim();
    let v_inv = h.coupling().clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    let u = linalg::block_diag(&linalg::symmetrize(&v_inv), &DMatrix::identity(n, n)) / (2.0 * alpha);
    Ok(LyapunovSolution { u })
}
