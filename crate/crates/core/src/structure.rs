//! The noise-reachable subspace and the invariant splitting of phase space.
//!
//! `l_V = span{V^k e_n}` is the Krylov subspace of the coupling matrix
//! generated by the distinguished site. Its doubling `L- = l_V x l_V` is the
//! part of phase space that thermalizes; the orthogonal complement `L0` is
//! invisible to the thermostat and evolves conservatively. Both are invariant
//! under the drift matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Hamiltonian, PhaseVector, SystemSpec};

/// Krylov residual cutoff relative to `||V||_2`.
pub const RANK_TOL_REL: f64 = 1e-9;
/// Cutoff on `|det Sigma(V)| / prod_k ||column_k||`.
pub const DET_TOL: f64 = 1e-10;

pub fn default_rank_tol(h: &Hamiltonian) -> f64 {
    RANK_TOL_REL * operator_norm(h)
}

fn operator_norm(h: &Hamiltonian) -> f64 {
    h.coupling().clone().symmetric_eigenvalues().amax()
}

fn check_index(h: &Hamiltonian, n: usize) -> Result<usize> {
    if n == 0 || n > h.dim() {
        return Err(Error::IndexOutOfRange { index: n, dim: h.dim() });
    }
    Ok(n - 1)
}

/// Orthonormal basis of `l_V` with first vector `e_n`.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    vectors: DMatrix<f64>,
    rank_tol: f64,
    smallest_retained: Option<f64>,
    largest_discarded: f64,
}

impl KrylovBasis {
    /// Numerical dimension `d` of `l_V`.
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// `N x d` matrix whose columns are the basis vectors.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Smallest residual norm that was accepted as a new direction
    /// (`None` when `d = 1`).
    pub fn smallest_retained(&self) -> Option<f64> {
        self.smallest_retained
    }

    /// Largest component of `V v_k` left outside the span, over all `k`.
    pub fn largest_discarded(&self) -> f64 {
        self.largest_discarded
    }
}

/// Builds `l_V` by Lanczos-style expansion: each new direction is `V v_k`
/// orthogonalized twice against the current basis. Expansion stops once the
/// residual norm drops to `rank_tol` (default `1e-9 ||V||`).
pub fn krylov_subspace(h: &Hamiltonian, n: usize, rank_tol: Option<f64>) -> Result<KrylovBasis> {
    let site = check_index(h, n)?;
    let dim = h.dim();
    let v = h.coupling();
    let rank_tol = rank_tol.unwrap_or_else(|| default_rank_tol(h));

    let mut basis: Vec<DVector<f64>> = vec![linalg::basis_vector(dim, site)];
    let mut smallest_retained: Option<f64> = None;
    while basis.len() < dim {
        let mut w = v * basis.last().unwrap();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let r = w.norm();
        if r <= rank_tol {
            break;
        }
        smallest_retained = Some(smallest_retained.map_or(r, |s: f64| s.min(r)));
        basis.push(w / r);
    }

    let vectors = DMatrix::from_columns(&basis);
    let projector = &vectors * vectors.transpose();
    let outside = v * &vectors - &projector * (v * &vectors);
    let largest_discarded = outside.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(KrylovBasis { vectors, rank_tol, smallest_retained, largest_discarded })
}

/// `Sigma(V)` with columns `V^0 e_n, ..., V^{N-1} e_n`.
pub fn sigma_matrix(h: &Hamiltonian, n: usize) -> Result<DMatrix<f64>> {
    let site = check_index(h, n)?;
    let dim = h.dim();
    let mut cols = Vec::with_capacity(dim);
    let mut x = linalg::basis_vector(dim, site);
    for _ in 0..dim {
        let next = h.coupling() * &x;
        cols.push(x);
        x = next;
    }
    Ok(DMatrix::from_columns(&cols))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaTest {
    /// Raw `det Sigma(V)`.
    pub det: f64,
    /// Hadamard ratio `|det| / prod ||column||` of the Chebyshev Krylov basis
    /// (see [`sigma_rank`]), in `[0, 1]`. Zero exactly when `det Sigma(V)` is.
    pub normalized: f64,
    pub degenerate: bool,
}

/// Decides whether `det Sigma(V) = 0`, i.e. whether some modes are never
/// reached by the noise.
///
/// The Hadamard ratio of the monomial columns decays geometrically with `N`
/// even for well-coupled networks (about `1e-19` for an 8-site chain), so the
/// verdict uses the Chebyshev columns, which differ from `Sigma(V)` by a
/// triangular change of basis with nonzero diagonal.
pub fn controllability_test(h: &Hamiltonian, n: usize) -> Result<SigmaTest> {
    let det = sigma_matrix(h, n)?.lu().determinant();
    let normalized = chebyshev_krylov(h, n)?.lu().determinant().abs();
    Ok(SigmaTest { det, normalized, degenerate: normalized < DET_TOL })
}

/// Unit columns `T_k(W) e_n / |T_k(W) e_n|` for `k < N`, with `W` the
/// spectrum of `V` mapped affinely onto `[-1, 1]`. Zero columns stay zero.
fn chebyshev_krylov(h: &Hamiltonian, n: usize) -> Result<DMatrix<f64>> {
    let site = check_index(h, n)?;
    let dim = h.dim();
    let eig = h.coupling().clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let center = 0.5 * (hi + lo);
    let radius = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    let w = (h.coupling() - DMatrix::identity(dim, dim) * center) / radius;

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(dim);
    cols.push(linalg::basis_vector(dim, site));
    if dim > 1 {
        cols.push(&w * &cols[0]);
    }
    while cols.len() < dim {
        let k = cols.len();
        let next = (&w * &cols[k - 1]) * 2.0 - &cols[k - 2];
        cols.push(next);
    }
    let mut basis = DMatrix::from_columns(&cols);
    for mut c in basis.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
    }
    Ok(basis)
}

/// Numerical rank of `Sigma(V)`, counting singular values above `rel_tol`
/// times the largest one.
///
/// The monomial columns `V^k e_n` become numerically dependent long before
/// they are exactly dependent, so the rank is taken on the Chebyshev columns
/// `T_k(W) e_n`. They span the same space as the columns of `Sigma(V)` for
/// every prefix length.
pub fn sigma_rank(h: &Hamiltonian, n: usize, rel_tol: f64) -> Result<usize> {
    let sv = chebyshev_krylov(h, n)?.singular_values();
    let top = sv.max();
    Ok(sv.iter().filter(|&&s| s > rel_tol * top).count())
}

/// Orthonormal bases and orthogonal projectors for `L-` and `L0`.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    krylov: KrylovBasis,
    basis_minus: DMatrix<f64>,
    basis_zero: DMatrix<f64>,
    projector_minus: DMatrix<f64>,
    projector_zero: DMatrix<f64>,
    distinguished: usize,
}

impl SubspaceDecomposition {
    pub fn krylov(&self) -> &KrylovBasis {
        &self.krylov
    }

    /// `2N x 2d`; columns `(v_1, 0), ..., (v_d, 0), (0, v_1), ..., (0, v_d)`.
    pub fn basis_minus(&self) -> &DMatrix<f64> {
        &self.basis_minus
    }

    /// `2N x 2(N - d)`, laid out like [`Self::basis_minus`].
    pub fn basis_zero(&self) -> &DMatrix<f64> {
        &self.basis_zero
    }

    pub fn projector_minus(&self) -> &DMatrix<f64> {
        &self.projector_minus
    }

    pub fn projector_zero(&self) -> &DMatrix<f64> {
        &self.projector_zero
    }

    pub fn particles(&self) -> usize {
        self.projector_minus.nrows() / 2
    }

    pub fn distinguished(&self) -> usize {
        self.distinguished
    }

    pub fn dim_minus(&self) -> usize {
        self.basis_minus.ncols()
    }

    pub fn dim_zero(&self) -> usize {
        self.basis_zero.ncols()
    }

    /// Splits `psi` into its `L0` and `L-` components, in that order.
    pub fn decompose_state(&self, psi: &PhaseVector) -> Result<(PhaseVector, PhaseVector)> {
        if psi.dim() != self.particles() {
            return Err(Error::DimensionMismatch { expected: self.particles(), found: psi.dim() });
        }
        let x = psi.to_stacked();
        let zero = PhaseVector::from_stacked(&(&self.projector_zero * &x))?;
        let minus = PhaseVector::from_stacked(&(&self.projector_minus * &x))?;
        Ok((zero, minus))
    }
}

fn double_up(block: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = block.shape();
    let mut out = DMatrix::zeros(2 * n, 2 * k);
    out.view_mut((0, 0), (n, k)).copy_from(block);
    out.view_mut((n, k), (n, k)).copy_from(block);
    out
}

pub fn build_decomposition(h: &Hamiltonian, n: usize, rank_tol: Option<f64>) -> Result<SubspaceDecomposition> {
    let krylov = krylov_subspace(h, n, rank_tol)?;
    let dim = h.dim();
    let d = krylov.dim();
    let k = krylov.vectors();

    // Householder QR of [K | I] gives a full orthogonal factor whose trailing
    // columns span the complement of l_V, in a fixed order.
    let mut stacked = DMatrix::zeros(dim, d + dim);
    stacked.view_mut((0, 0), (dim, d)).copy_from(k);
    stacked.view_mut((0, d), (dim, dim)).fill_with_identity();
    let q = stacked.qr().q();
    let mut complement = q.columns(d, dim - d).into_owned();
    // The complement is orthogonal to v_1 = e_n; pin that coordinate to an
    // exact zero so that g_n has no L0 component at all.
    complement.row_mut(n - 1).fill(0.0);

    let basis_minus = double_up(k);
    let basis_zero = double_up(&complement);
    let projector_minus = &basis_minus * basis_minus.transpose();
    let projector_zero = &basis_zero * basis_zero.transpose();
    Ok(SubspaceDecomposition { krylov, basis_minus, basis_zero, projector_minus, projector_zero, distinguished: n })
}

/// The dynamics expressed in the orthonormal coordinates `psi'` of `L-`.
#[derive(Debug, Clone)]
pub struct RestrictedSystem {
    hamiltonian: Hamiltonian,
    d_prime: DMatrix<f64>,
    g_prime: DVector<f64>,
    a_prime: DMatrix<f64>,
    embedding: DMatrix<f64>,
    alpha: f64,
    sigma: f64,
}

impl RestrictedSystem {
    /// Restricted coupling `V'`, SPD of size `d`.
    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn v_prime(&self) -> &DMatrix<f64> {
        self.hamiltonian.coupling()
    }

    pub fn d_prime(&self) -> &DMatrix<f64> {
        &self.d_prime
    }

    pub fn g_prime(&self) -> &DVector<f64> {
        &self.g_prime
    }

    pub fn a_prime(&self) -> &DMatrix<f64> {
        &self.a_prime
    }

    /// `P`: `2N x 2d`, maps primed coordinates into phase space.
    pub fn embedding(&self) -> &DMatrix<f64> {
        &self.embedding
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `H'(psi') = psi'^T diag(V', E) psi' / 2`.
    pub fn energy(&self, psi_prime: &DVector<f64>) -> Result<f64> {
        if psi_prime.len() != 2 * self.dim() {
            return Err(Error::DimensionMismatch { expected: 2 * self.dim(), found: psi_prime.len() });
        }
        Ok(self.hamiltonian.energy_of(psi_prime))
    }

    pub fn energy_form(&self) -> DMatrix<f64> {
        self.hamiltonian.energy_form()
    }

    pub fn to_full(&self, psi_prime: &DVector<f64>) -> DVector<f64> {
        &self.embedding * psi_prime
    }

    /// Coordinates of the `L-` component of a stacked phase vector.
    pub fn to_restricted(&self, x: &DVector<f64>) -> DVector<f64> {
        self.embedding.tr_mul(x)
    }

    pub fn spectral_abscissa(&self) -> f64 {
        linalg::spectral_abscissa(&self.a_prime)
    }
}

/// `A' = P^T A P`, `V' = K^T V K`, `D' = alpha Delta_1`, `g' = (0, e_1)`.
pub fn restrict_system(spec: &SystemSpec, dec: &SubspaceDecomposition) -> Result<RestrictedSystem> {
    if dec.particles() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: dec.particles() });
    }
    if dec.distinguished() != spec.distinguished() {
        return Err(Error::invalid(format!(
            "decomposition built for site {} but system thermostats site {}",
            dec.distinguished(),
            spec.distinguished()
        )));
    }
    let k = dec.krylov().vectors();
    let d = k.ncols();
    let v_prime = linalg::symmetrize(&(k.tr_mul(spec.hamiltonian().coupling()) * k));
    let hamiltonian = Hamiltonian::new(v_prime)?;
    let mut d_prime = DMatrix::zeros(d, d);
    d_prime[(0, 0)] = spec.alpha();
    let g_prime = linalg::basis_vector(2 * d, d);
    let p = dec.basis_minus().clone();
    let a_prime = p.tr_mul(spec.drift().matrix()) * &p;
    Ok(RestrictedSystem { hamiltonian, d_prime, g_prime, a_prime, embedding: p, alpha: spec.alpha(), sigma: spec.sigma() })
}

/// Decomposition with the default rank tolerance, plus the restricted system.
pub fn split(spec: &SystemSpec) -> Result<(SubspaceDecomposition, RestrictedSystem)> {
    let dec = build_decomposition(spec.hamiltonian(), spec.distinguished(), None)?;
    let restricted = restrict_system(spec, &dec)?;
    Ok((dec, restricted))
}

/// Summary of the splitting for one instance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StructureReport {
    pub particles: usize,
    pub distinguished: usize,
    pub krylov_dim: usize,
    pub dim_minus: usize,
    pub dim_zero: usize,
    pub sigma_det: f64,
    pub sigma_det_normalized: f64,
    pub degenerate: bool,
    pub spectral_abscissa_restricted: f64,
    pub smallest_retained_residual: Option<f64>,
    pub largest_discarded_residual: f64,
    pub rank_tol: f64,
}

pub fn analyze(spec: &SystemSpec) -> Result<StructureReport> {
    let h = spec.hamiltonian();
    let n = spec.distinguished();
    let dec = build_decomposition(h, n, None)?;
    let restricted = restrict_system(spec, &dec)?;
    let test = controllability_test(h, n)?;
    let k = dec.krylov();
    Ok(StructureReport {
        particles: spec.dim(),
        distinguished: n,
        krylov_dim: k.dim(),
        dim_minus: dec.dim_minus(),
        dim_zero: dec.dim_zero(),
        sigma_det: test.det,
        sigma_det_normalized: test.normalized,
        degenerate: test.degenerate,
        spectral_abscissa_restricted: restricted.spectral_abscissa(),
        smallest_retained_residual: k.smallest_retained(),
        largest_discarded_residual: k.largest_discarded(),
        rank_tol: k.rank_tol(),
    })
}
