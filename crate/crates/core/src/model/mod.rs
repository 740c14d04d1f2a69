//! Problem instances: the coupling matrix, the single-site dissipation and
//! noise placement, the drift matrix and the quadratic energy.
//!
//! The state is `psi = (q, p)` in `R^{2N}`. Positions and momenta evolve as
//!
//! ```text
//! dq = p dt
//! dp = (-V q - alpha p_n e_n) dt + sigma e_n dW
//! ```
//!
//! with a single distinguished site `n`. Units are dimensionless; `V` carries
//! squared frequencies, `alpha` an inverse time and `sigma^2` energy per time.

mod io;

pub use io::{format_matrix, parse_matrix, read_matrix_file, write_matrix_file};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance on `max |V_ij - V_ji|` against `||V||_F`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Quadratic Hamiltonian `H = |p|^2 / 2 + q^T V q / 2` with `V` symmetric
/// positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    v: DMatrix<f64>,
}

impl Hamiltonian {
    /// Validates and symmetrizes `v`. Positive definiteness is decided by a
    /// Cholesky attempt.
    pub fn new(v: DMatrix<f64>) -> Result<Self> {
        if v.nrows() == 0 || v.nrows() != v.ncols() {
            return Err(Error::invalid(format!(
                "coupling matrix must be square and non-empty, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("coupling matrix has non-finite entries"));
        }
        let asymmetry = linalg::max_asymmetry(&v);
        let allowed = SYMMETRY_TOL * v.norm();
        if asymmetry > allowed {
            return Err(Error::NotSymmetric { asymmetry, allowed });
        }
        let v = linalg::symmetrize(&v);
        if v.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { v })
    }

    /// Number of particles `N`.
    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn kinetic(&self, psi: &PhaseVector) -> Result<f64> {
        self.check(psi)?;
        Ok(0.5 * psi.p.norm_squared())
    }

    pub fn potential(&self, psi: &PhaseVector) -> Result<f64> {
        self.check(psi)?;
        Ok(0.5 * psi.q.dot(&(&self.v * &psi.q)))
    }

    /// Total energy `T + U`.
    pub fn energy(&self, psi: &PhaseVector) -> Result<f64> {
        Ok(self.kinetic(psi)? + self.potential(psi)?)
    }

    /// Energy of a stacked `2N` vector; panics on a length mismatch.
    pub(crate) fn energy_of(&self, x: &DVector<f64>) -> f64 {
        let n = self.dim();
        let q = x.rows(0, n);
        let p = x.rows(n, n);
        0.5 * (q.dot(&(&self.v * q)) + p.norm_squared())
    }

    /// `Q = diag(V, E)`, so that `H(psi) = psi^T Q psi / 2`.
    pub fn energy_form(&self) -> DMatrix<f64> {
        linalg::block_diag(&self.v, &DMatrix::identity(self.dim(), self.dim()))
    }

    /// `V = G G^T + conditioning * I` with `G` a seeded standard Gaussian draw.
    pub fn random_spd(n: usize, seed: u64, conditioning: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("particle count must be at least 1"));
        }
        if !(conditioning > 0.0 && conditioning.is_finite()) {
            return Err(Error::invalid("conditioning shift must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let v = &g * g.transpose() + DMatrix::identity(n, n) * conditioning;
        Self::new(linalg::symmetrize(&v))
    }

    /// Nearest-neighbour chain with on-site frequency `omega` and spring
    /// constant `coupling`: `omega^2 + 2c` on the diagonal, `-c` off it.
    pub fn chain(n: usize, omega: f64, coupling: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("particle count must be at least 1"));
        }
        if !(omega > 0.0 && omega.is_finite()) || !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::invalid(format!(
                "chain needs omega > 0 and coupling >= 0 (got omega = {omega}, coupling = {coupling})"
            )));
        }
        let v = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                omega * omega + 2.0 * coupling
            } else if i.abs_diff(j) == 1 {
                -coupling
            } else {
                0.0
            }
        });
        Self::new(v)
    }

    fn check(&self, psi: &PhaseVector) -> Result<()> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        Ok(())
    }
}

/// A point `(q, p)` of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhaseVector {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        Ok(Self { q, p })
    }

    pub fn zeros(n: usize) -> Self {
        Self { q: DVector::zeros(n), p: DVector::zeros(n) }
    }

    /// Splits a stacked `2N` vector into `(q, p)`.
    pub fn from_stacked(x: &DVector<f64>) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::invalid(format!("phase vector length {} is odd", x.len())));
        }
        let n = x.len() / 2;
        Ok(Self { q: x.rows(0, n).into_owned(), p: x.rows(n, n).into_owned() })
    }

    pub fn to_stacked(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n, |i, _| if i < n { self.q[i] } else { self.p[i - n] })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Euclidean scalar product over both blocks.
    pub fn dot(&self, other: &PhaseVector) -> f64 {
        self.q.dot(&other.q) + self.p.dot(&other.p)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    hamiltonian: Hamiltonian,
    alpha: f64,
    sigma: f64,
    site: usize,
}

impl SystemSpec {
    /// `distinguished` is the 1-based index `n` of the thermostatted site.
    pub fn new(hamiltonian: Hamiltonian, alpha: f64, sigma: f64, distinguished: usize) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be finite and > 0, got {sigma}")));
        }
        let dim = hamiltonian.dim();
        if distinguished == 0 || distinguished > dim {
            return Err(Error::IndexOutOfRange { index: distinguished, dim });
        }
        Ok(Self { hamiltonian, alpha, sigma, site: distinguished - 1 })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// 1-based distinguished index.
    pub fn distinguished(&self) -> usize {
        self.site + 1
    }

    /// 0-based distinguished index.
    pub fn site(&self) -> usize {
        self.site
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.hamiltonian.clone(), alpha, self.sigma, self.distinguished())
    }

    pub fn drift(&self) -> DriftMatrix {
        DriftMatrix::new(self)
    }
}

/// `A = [[0, E], [-V, -alpha Delta_n]]` together with the noise direction
/// `g_n = (0, e_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    a: DMatrix<f64>,
    noise: DVector<f64>,
}

impl DriftMatrix {
    pub fn new(spec: &SystemSpec) -> Self {
        let n = spec.dim();
        let v = spec.hamiltonian.coupling();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).fill_with_identity();
        a.view_mut((n, 0), (n, n)).copy_from(&(-v));
        a[(n + spec.site, n + spec.site)] = -spec.alpha;
        let noise = linalg::basis_vector(2 * n, n + spec.site);
        Self { a, noise }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn noise_vector(&self) -> &DVector<f64> {
        &self.noise
    }

    pub fn apply(&self, psi: &PhaseVector) -> Result<PhaseVector> {
        if 2 * psi.dim() != self.a.nrows() {
            return Err(Error::DimensionMismatch { expected: self.a.nrows() / 2, found: psi.dim() });
        }
        PhaseVector::from_stacked(&(&self.a * psi.to_stacked()))
    }

    pub fn spectral_abscissa(&self) -> f64 {
        linalg::spectral_abscissa(&self.a)
    }

    pub fn spectral_radius(&self) -> f64 {
        linalg::spectral_radius(&self.a)
    }
}
