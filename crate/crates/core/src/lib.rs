//! Linear oscillator networks coupled to a heat bath through one site.
//!
//! A network of `N` unit-mass oscillators with coupling matrix `V` has friction
//! `alpha` and white noise of amplitude `sigma` acting on the momentum of a
//! single distinguished site `n`. The crate provides
//!
//! - [`model`]: instances, the drift matrix and the quadratic energy;
//! - [`structure`]: the Krylov subspace reached by the noise and the invariant
//!   splitting of phase space into a thermalizing and a conservative part;
//! - [`gauss`]: exact propagation of mean and covariance, Lyapunov solutions,
//!   the Gibbs limit and the linear energy growth without friction;
//! - [`sde`]: Monte Carlo ensembles that check all of the above empirically;
//! - [`cli`]: the experiment runner behind the `oscbath` binary.
//!
//! ```
//! use nalgebra::dmatrix;
//! use oscbath::model::{Hamiltonian, PhaseVector, SystemSpec};
//! use oscbath::{gauss, structure};
//!
//! let h = Hamiltonian::new(dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap();
//! let spec = SystemSpec::new(h, 1.0, 1.0, 1).unwrap();
//! let (dec, restricted) = structure::split(&spec).unwrap();
//! assert_eq!(dec.dim_zero(), 0);
//! let limit = gauss::limit_mean_energy(&spec, &restricted).unwrap();
//! assert_eq!(limit, 1.0);
//! let t = gauss::convergence_time(&restricted).unwrap();
//! let e = gauss::mean_energy_at(&spec, &restricted, &PhaseVector::zeros(2), t).unwrap();
//! assert!((e - limit).abs() < 1e-8);
//! ```

pub mod cli;
pub mod error;
pub mod gauss;
pub mod linalg;
pub mod model;
pub mod sde;
pub mod structure;

pub use error::{Error, Result};
