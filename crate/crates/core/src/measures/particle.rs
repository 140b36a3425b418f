use super::base::{AtomPrior, BaseMeasure};
use super::urn::{sample_polya_urn, PolyaUrnState};
use super::{gamma_unchecked, sample_sga, SGaParams};
use crate::error::{ensure_positive, Error, Result};
use crate::SimRng;

/// Particle approximation `Q_p = sqrt(T/p) * sum_i J_i delta_{X_i}` of a
/// symmetric Gamma random measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMeasure<A> {
    pub total_mass: f64,
    pub jumps: Vec<f64>,
    pub atoms: Vec<A>,
    /// Clustering of `atoms`, as produced by the Pólya urn.
    pub urn: Option<PolyaUrnState<A>>,
}

impl<A> ParticleMeasure<A> {
    /// Hand-built measure; `jumps` and `atoms` must have equal length.
    pub fn new(total_mass: f64, jumps: Vec<f64>, atoms: Vec<A>) -> Result<Self> {
        if !(total_mass >= 0.0 && total_mass.is_finite()) {
            return Err(Error::param(format!("total mass must be >= 0, got {total_mass}")));
        }
        if jumps.is_empty() || jumps.len() != atoms.len() {
            return Err(Error::param(format!(
                "need p >= 1 jumps and atoms of equal length, got {} and {}",
                jumps.len(),
                atoms.len()
            )));
        }
        Ok(Self {
            total_mass,
            jumps,
            atoms,
            urn: None,
        })
    }

    pub fn p(&self) -> usize {
        self.jumps.len()
    }

    /// Common factor `sqrt(T/p)`.
    pub fn weight_factor(&self) -> f64 {
        (self.total_mass / self.p() as f64).sqrt()
    }

    /// Weight `sqrt(T/p) * J_i` of particle `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weight_factor() * self.jumps[i]
    }

    /// `Q_p(A)` for the set `{x : contains(x)}`.
    pub fn mass_of(&self, contains: impl Fn(&A) -> bool) -> f64 {
        let s: f64 = self
            .jumps
            .iter()
            .zip(&self.atoms)
            .filter(|(_, x)| contains(x))
            .map(|(j, _)| j)
            .sum();
        self.weight_factor() * s
    }
}

/// Draws `Q_p` with `T ~ Ga(alpha, eta)`, `J_i ~ SGa(1, 1)` i.i.d. and
/// `X_1..X_p` a Pólya urn sequence with base `alpha * F`.
///
/// As `p` grows, `Q_p` converges in distribution to the symmetric Gamma random
/// measure with base `alpha * F` and scale parameter `sqrt(eta)`: a caller
/// that wants limit scale `s` passes `eta = s^2`. `eta` is stored as given.
pub fn build_particle_measure<P: AtomPrior>(
    eta: f64,
    base: &BaseMeasure<P>,
    p: usize,
    rng: &mut SimRng,
) -> Result<ParticleMeasure<P::Atom>> {
    ensure_positive("eta", eta)?;
    if p == 0 {
        return Err(Error::param("particle count p must be at least 1"));
    }
    let total_mass = gamma_unchecked(base.alpha(), eta, rng);
    let unit = SGaParams::unit();
    let jumps: Vec<f64> = (0..p).map(|_| sample_sga(&unit, rng)).collect();
    let (atoms, urn) = sample_polya_urn(base, p, rng)?;
    Ok(ParticleMeasure {
        total_mass,
        jumps,
        atoms,
        urn: Some(urn),
    })
}
