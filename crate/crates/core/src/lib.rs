//! Symmetric Gamma process mixtures for nonparametric regression.
//!
//! The crate is organised bottom-up:
//!
//! * [`measures`] samples symmetric Gamma variables, Pólya urn sequences and
//!   the particle approximation `Q_p = sqrt(T/p) * sum_i J_i delta_{X_i}`.
//! * [`kernels`] evaluates mother functions (Gaussian, Symmlet-8) and the
//!   location-scale / location-modulation kernel families.
//! * [`models`] holds the observation models: fixed-design Gaussian regression
//!   and the Radon-domain CT model with its Shepp–Logan phantom.
//! * [`sampler`] is the Pólya-urn Gibbs sampler over allocations, atoms,
//!   jumps, total mass, noise variance, `alpha` and scale-mixture weights.
//! * [`diagnostics`] implements Geweke's Z, the staged burn-in protocol, ESS
//!   and the run-until-converged driver.
//! * [`bench`] reproduces the univariate test-function experiments.
//! * [`cli`] is the command-line front end used by the `sgmix` binary.

pub mod bench;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod kernels;
pub mod measures;
pub mod models;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use rng::SimRng;
