use std::f64::consts::FRAC_PI_2;
use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{gamma_ln_pdf, gamma_unchecked, normal_ln_pdf, std_normal};
use crate::error::{ensure_positive, Error, Result};
use crate::kernels::{ModulationAtom, ScaleAtom, ShearletAtom, ShearletMatrix};
use crate::SimRng;

/// A probability distribution `F` over atom parameters.
///
/// Besides sampling and density evaluation, a prior exposes an unconstrained
/// coordinate system used by the random-walk Metropolis moves: `propose`
/// perturbs one unconstrained coordinate with a centred Gaussian step and
/// returns the log-Jacobian difference `ln|J(new)| - ln|J(old)|` of the map
/// from unconstrained coordinates to parameters.
pub trait AtomPrior: Clone + Debug + Send + Sync {
    type Atom: Clone + Debug + PartialEq + Send + Sync;

    fn sample(&self, rng: &mut SimRng) -> Self::Atom;

    fn ln_density(&self, atom: &Self::Atom) -> f64;

    fn coord_names(&self) -> &'static [&'static str];

    fn propose(&self, atom: &Self::Atom, coord: usize, step: f64, rng: &mut SimRng)
        -> (Self::Atom, f64);

    /// Initial random-walk step size per coordinate.
    fn default_steps(&self) -> Vec<f64>;

    fn n_coords(&self) -> usize {
        self.coord_names().len()
    }

    /// Number of components of a latent-indicator mixture in the prior, 0 when
    /// the prior has none.
    fn mixture_components(&self) -> usize {
        0
    }

    fn mixture_weights(&self) -> &[f64] {
        &[]
    }

    fn set_mixture_weights(&mut self, _weights: &[f64]) {}

    fn component_of(&self, _atom: &Self::Atom) -> Option<usize> {
        None
    }

    fn set_component(&self, _atom: &mut Self::Atom, _component: usize) {}

    /// Log density of the mixture-governed parameter of `atom` under
    /// component `component` (weight excluded).
    fn component_ln_density(&self, _atom: &Self::Atom, _component: usize) -> f64 {
        0.0
    }
}

/// The base distribution `alpha * F`.
#[derive(Debug, Clone)]
pub struct BaseMeasure<P: AtomPrior> {
    alpha: f64,
    pub prior: P,
}

impl<P: AtomPrior> BaseMeasure<P> {
    pub fn new(alpha: f64, prior: P) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        Ok(Self { alpha, prior })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Scalar normal prior; mostly useful for tests and one-dimensional toys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl AtomPrior for NormalPrior {
    type Atom = f64;

    fn sample(&self, rng: &mut SimRng) -> f64 {
        self.mean + self.sd * std_normal(rng)
    }

    fn ln_density(&self, x: &f64) -> f64 {
        normal_ln_pdf(*x, self.mean, self.sd)
    }

    fn coord_names(&self) -> &'static [&'static str] {
        &["x"]
    }

    fn propose(&self, x: &f64, _coord: usize, step: f64, rng: &mut SimRng) -> (f64, f64) {
        (x + step * std_normal(rng), 0.0)
    }

    fn default_steps(&self) -> Vec<f64> {
        vec![self.sd]
    }
}

/// Scalar uniform prior on `[lo, hi]`, moved on the logit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    pub lo: f64,
    pub hi: f64,
}

impl AtomPrior for UniformPrior {
    type Atom = f64;

    fn sample(&self, rng: &mut SimRng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random::<f64>()
    }

    fn ln_density(&self, x: &f64) -> f64 {
        if *x >= self.lo && *x <= self.hi {
            -(self.hi - self.lo).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn coord_names(&self) -> &'static [&'static str] {
        &["x"]
    }

    fn propose(&self, x: &f64, _coord: usize, step: f64, rng: &mut SimRng) -> (f64, f64) {
        let (y, jac) = logit_step(*x, self.lo, self.hi, step * std_normal(rng));
        (y, jac)
    }

    fn default_steps(&self) -> Vec<f64> {
        vec![1.0]
    }
}

/// Moves `x` in `(lo, hi)` by `delta` on the logit scale; returns the new
/// value and the log-Jacobian difference.
fn logit_step(x: f64, lo: f64, hi: f64, delta: f64) -> (f64, f64) {
    let w = hi - lo;
    let u = ((x - lo) / w).clamp(1e-300, 1.0 - 1e-16);
    let z = (u / (1.0 - u)).ln() + delta;
    let u_new = 1.0 / (1.0 + (-z).exp());
    let y = lo + w * u_new;
    // d x / d z = w u (1 - u)
    let ln_jac = |u: f64| u.ln() + (1.0 - u).ln();
    (y, ln_jac(u_new) - ln_jac(u))
}

/// Moves a positive value by `delta` on the log scale.
fn log_step(x: f64, delta: f64) -> (f64, f64) {
    (x * delta.exp(), delta)
}

/// One `Ga(shape, rate)` component of a scale prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaComponent {
    pub shape: f64,
    pub rate: f64,
}

impl GammaComponent {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// Prior for one-dimensional location-scale atoms: `mu ~ N(mu_mean, mu_sd^2)`
/// independently of the inverse bandwidth `scale ~ sum_c w_c Ga_c`.
///
/// Each atom carries its mixture indicator so the weights can be updated by
/// conjugate Gibbs steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalePrior {
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub components: Vec<GammaComponent>,
    pub weights: Vec<f64>,
}

impl ScalePrior {
    pub fn new(mu_mean: f64, mu_sd: f64, components: Vec<GammaComponent>) -> Result<Self> {
        ensure_positive("translation prior sd", mu_sd)?;
        if components.is_empty() {
            return Err(Error::param("scale prior needs at least one component"));
        }
        for c in &components {
            ensure_positive("scale component shape", c.shape)?;
            ensure_positive("scale component rate", c.rate)?;
        }
        let k = components.len();
        Ok(Self {
            mu_mean,
            mu_sd,
            components,
            weights: vec![1.0 / k as f64; k],
        })
    }

    fn draw_component(&self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (c, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return c;
            }
        }
        self.weights.len() - 1
    }
}

impl AtomPrior for ScalePrior {
    type Atom = ScaleAtom;

    fn sample(&self, rng: &mut SimRng) -> ScaleAtom {
        let mu = self.mu_mean + self.mu_sd * std_normal(rng);
        let component = self.draw_component(rng);
        let c = self.components[component];
        let scale = gamma_unchecked(c.shape, c.rate, rng);
        ScaleAtom {
            mu,
            scale,
            component,
        }
    }

    fn ln_density(&self, atom: &ScaleAtom) -> f64 {
        let c = self.components[atom.component];
        normal_ln_pdf(atom.mu, self.mu_mean, self.mu_sd)
            + self.weights[atom.component].ln()
            + gamma_ln_pdf(atom.scale, c.shape, c.rate)
    }

    fn coord_names(&self) -> &'static [&'static str] {
        &["mu", "log_scale"]
    }

    fn propose(&self, atom: &ScaleAtom, coord: usize, step: f64, rng: &mut SimRng)
        -> (ScaleAtom, f64) {
        let z = step * std_normal(rng);
        let mut out = *atom;
        match coord {
            0 => {
                out.mu += z;
                (out, 0.0)
            }
            _ => {
                let (s, jac) = log_step(atom.scale, z);
                out.scale = s;
                (out, jac)
            }
        }
    }

    fn default_steps(&self) -> Vec<f64> {
        vec![0.05, 0.3]
    }

    fn mixture_components(&self) -> usize {
        self.components.len()
    }

    fn mixture_weights(&self) -> &[f64] {
        &self.weights
    }

    fn set_mixture_weights(&mut self, weights: &[f64]) {
        self.weights.copy_from_slice(weights);
    }

    fn component_of(&self, atom: &ScaleAtom) -> Option<usize> {
        Some(atom.component)
    }

    fn set_component(&self, atom: &mut ScaleAtom, component: usize) {
        atom.component = component;
    }

    fn component_ln_density(&self, atom: &ScaleAtom, component: usize) -> f64 {
        let c = self.components[component];
        gamma_ln_pdf(atom.scale, c.shape, c.rate)
    }
}

/// Prior for one-dimensional location-modulation atoms:
/// `mu ~ N(mu_mean, mu_sd^2)`, `xi ~ N(xi_mean, xi_sd^2)`, `phi ~ U[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationPrior {
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub xi_mean: f64,
    pub xi_sd: f64,
}

impl AtomPrior for ModulationPrior {
    type Atom = ModulationAtom;

    fn sample(&self, rng: &mut SimRng) -> ModulationAtom {
        ModulationAtom {
            mu: self.mu_mean + self.mu_sd * std_normal(rng),
            xi: self.xi_mean + self.xi_sd * std_normal(rng),
            phi: FRAC_PI_2 * rng.random::<f64>(),
        }
    }

    fn ln_density(&self, atom: &ModulationAtom) -> f64 {
        if !(0.0..=FRAC_PI_2).contains(&atom.phi) {
            return f64::NEG_INFINITY;
        }
        normal_ln_pdf(atom.mu, self.mu_mean, self.mu_sd)
            + normal_ln_pdf(atom.xi, self.xi_mean, self.xi_sd)
            - FRAC_PI_2.ln()
    }

    fn coord_names(&self) -> &'static [&'static str] {
        &["mu", "xi", "logit_phi"]
    }

    fn propose(&self, atom: &ModulationAtom, coord: usize, step: f64, rng: &mut SimRng)
        -> (ModulationAtom, f64) {
        let z = step * std_normal(rng);
        let mut out = *atom;
        match coord {
            0 => {
                out.mu += z;
                (out, 0.0)
            }
            1 => {
                out.xi += z;
                (out, 0.0)
            }
            _ => {
                let (phi, jac) = logit_step(atom.phi, 0.0, FRAC_PI_2, z);
                out.phi = phi;
                (out, jac)
            }
        }
    }

    fn default_steps(&self) -> Vec<f64> {
        vec![0.05, 0.2 * self.xi_sd, 0.5]
    }
}

/// Prior over two-dimensional location-scale atoms with shearlet-type
/// dilations: `mu ~ N(0, tau I)`, `a ~ N(1, sigma_a2)` restricted to `a > 0`,
/// `s ~ N(0, sigma_s2)`. `tau`, `sigma_a2` and `sigma_s2` are variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearletPrior {
    pub tau: f64,
    pub sigma_a2: f64,
    pub sigma_s2: f64,
}

impl ShearletPrior {
    pub fn new(tau: f64, sigma_a2: f64, sigma_s2: f64) -> Result<Self> {
        ensure_positive("tau", tau)?;
        ensure_positive("sigma_a2", sigma_a2)?;
        ensure_positive("sigma_s2", sigma_s2)?;
        Ok(Self {
            tau,
            sigma_a2,
            sigma_s2,
        })
    }

    /// `ln P(a > 0)` for `a ~ N(1, sigma_a2)`.
    fn ln_truncation_mass(&self) -> f64 {
        let sd = self.sigma_a2.sqrt();
        Normal::new(0.0, 1.0).unwrap().cdf(1.0 / sd).ln()
    }
}

impl AtomPrior for ShearletPrior {
    type Atom = ShearletAtom;

    fn sample(&self, rng: &mut SimRng) -> ShearletAtom {
        let sd_mu = self.tau.sqrt();
        let mu = [sd_mu * std_normal(rng), sd_mu * std_normal(rng)];
        let sd_a = self.sigma_a2.sqrt();
        let a = loop {
            let a = 1.0 + sd_a * std_normal(rng);
            if a > 0.0 {
                break a;
            }
        };
        let s = self.sigma_s2.sqrt() * std_normal(rng);
        ShearletAtom {
            mu,
            shear: ShearletMatrix { a, s },
        }
    }

    fn ln_density(&self, atom: &ShearletAtom) -> f64 {
        if atom.shear.a <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let sd_mu = self.tau.sqrt();
        normal_ln_pdf(atom.mu[0], 0.0, sd_mu)
            + normal_ln_pdf(atom.mu[1], 0.0, sd_mu)
            + normal_ln_pdf(atom.shear.a, 1.0, self.sigma_a2.sqrt())
            - self.ln_truncation_mass()
            + normal_ln_pdf(atom.shear.s, 0.0, self.sigma_s2.sqrt())
    }

    fn coord_names(&self) -> &'static [&'static str] {
        &["mu_x", "mu_y", "log_a", "s"]
    }

    fn propose(&self, atom: &ShearletAtom, coord: usize, step: f64, rng: &mut SimRng)
        -> (ShearletAtom, f64) {
        let z = step * std_normal(rng);
        let mut out = *atom;
        match coord {
            0 | 1 => {
                out.mu[coord] += z;
                (out, 0.0)
            }
            2 => {
                let (a, jac) = log_step(atom.shear.a, z);
                out.shear.a = a;
                (out, jac)
            }
            _ => {
                out.shear.s += z;
                (out, 0.0)
            }
        }
    }

    fn default_steps(&self) -> Vec<f64> {
        vec![0.05, 0.05, 0.1, 0.1]
    }
}
