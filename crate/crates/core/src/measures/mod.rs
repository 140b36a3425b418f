//! Symmetric Gamma distributions, Pólya urn sequences and the particle
//! approximation of a symmetric Gamma random measure.
//!
//! Gamma distributions are parameterised by `(shape, rate)` everywhere, so
//! `Ga(5, 10)` has mean `0.5`.

mod base;
mod particle;
mod urn;

pub use base::{
    AtomPrior, BaseMeasure, GammaComponent, ModulationPrior, NormalPrior, ScalePrior,
    ShearletPrior, UniformPrior,
};
pub use particle::{build_particle_measure, ParticleMeasure};
pub use urn::{sample_polya_urn, PolyaUrnState};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_positive, Result};
use crate::SimRng;

/// Parameters `(a, b)` of `SGa(a, b)`, the law of `X - Y` for independent
/// `X, Y ~ Ga(a, b)`. Its characteristic function is `(1 + t^2/b^2)^{-a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SGaParams {
    a: f64,
    b: f64,
}

impl SGaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        ensure_positive("SGa shape a", a)?;
        ensure_positive("SGa scale b", b)?;
        Ok(Self { a, b })
    }

    /// `SGa(1, 1)`, the law of the particle jumps.
    pub fn unit() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Draws from `Ga(shape, rate)`.
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut SimRng) -> Result<f64> {
    ensure_positive("gamma shape", shape)?;
    ensure_positive("gamma rate", rate)?;
    Ok(gamma_unchecked(shape, rate, rng))
}

#[inline]
pub(crate) fn gamma_unchecked(shape: f64, rate: f64, rng: &mut SimRng) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("validated gamma parameters")
        .sample(rng)
}

/// Draws from `SGa(a, b)` as the difference of two independent gamma draws.
pub fn sample_sga(params: &SGaParams, rng: &mut SimRng) -> f64 {
    let g = Gamma::new(params.a, 1.0 / params.b).expect("validated SGa parameters");
    let x = g.sample(rng);
    let y = g.sample(rng);
    x - y
}

/// Raw moment `E[Z^order]` of `Z ~ SGa(a, b)`.
///
/// Odd moments vanish. For `order = 2n` the moment is
/// `(2n)!/n! * a^{(n)} / b^{2n}` with `a^{(n)}` the rising factorial.
pub fn sga_moment(params: &SGaParams, order: u32) -> f64 {
    if order == 0 {
        return 1.0;
    }
    if order % 2 == 1 {
        return 0.0;
    }
    let n = order / 2;
    let mut ratio = 1.0; // (2n)!/n! = (n+1)(n+2)...(2n)
    for k in (n + 1)..=(2 * n) {
        ratio *= k as f64;
    }
    let mut rising = 1.0;
    for k in 0..n {
        rising *= params.a + k as f64;
    }
    ratio * rising / params.b.powi(order as i32)
}

/// Log density of `Ga(shape, rate)` at `x`; `-inf` outside the support.
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Log density of `N(mean, sd^2)` at `x`.
pub fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Standard normal draw.
#[inline]
pub(crate) fn std_normal(rng: &mut SimRng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
