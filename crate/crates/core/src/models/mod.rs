//! Observation models: fixed-design Gaussian regression and the Radon-domain
//! CT model, plus the fitted-values cache shared with the sampler.

mod cache;
pub mod io;
mod phantom;
mod radon;

pub use cache::FittedValuesCache;
pub use phantom::{phantom_radon, phantom_value, shepp_logan, Ellipse, Image, SHEPP_LOGAN};
pub use radon::{radon_gaussian, radon_grid, RadonDataset, RadonModel};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::kernels::AtomKernel;

/// Noise variance of a Gaussian observation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseState {
    sigma2: f64,
}

impl NoiseState {
    pub fn new(sigma2: f64) -> Result<Self> {
        ensure_positive("noise variance sigma2", sigma2)?;
        Ok(Self { sigma2 })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// `-(n/2) log(2 pi sigma2) - sum (y - fitted)^2 / (2 sigma2)`.
pub fn log_likelihood(y: &[f64], fitted: &[f64], noise: NoiseState) -> Result<f64> {
    if y.len() != fitted.len() {
        return Err(Error::param(format!(
            "fitted has length {}, data has {}",
            fitted.len(),
            y.len()
        )));
    }
    let ssr: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(gaussian_loglik_from_ssr(y.len(), ssr, noise.sigma2))
}

#[inline]
pub(crate) fn gaussian_loglik_from_ssr(n: usize, ssr: f64, sigma2: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    -0.5 * n as f64 * (2.0 * PI * sigma2).ln() - ssr / (2.0 * sigma2)
}

/// Fixed-design regression data: `n` points in `[-S, S]^d` and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    points: Vec<f64>,
    dim: usize,
    y: Vec<f64>,
    half_width: f64,
}

impl RegressionDataset {
    /// `points` is row-major `n x dim`.
    pub fn new(points: Vec<f64>, dim: usize, y: Vec<f64>, half_width: f64) -> Result<Self> {
        ensure_positive("domain half-width S", half_width)?;
        if dim == 0 || y.is_empty() || points.len() != dim * y.len() {
            return Err(Error::param(format!(
                "need n >= 1 responses and n*d design coordinates, got n={} d={} coords={}",
                y.len(),
                dim,
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|v| !(v.abs() <= half_width)) {
            return Err(Error::param(format!(
                "design coordinate {bad} outside [-{half_width}, {half_width}]"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("responses must be finite"));
        }
        Ok(Self {
            points,
            dim,
            y,
            half_width,
        })
    }

    /// Univariate design.
    pub fn univariate(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        Self::new(x, 1, y, s)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// An observation model linear in the mixing measure: every atom maps to a
/// response vector (the kernel pushed through the observation operator) and
/// the data are Gaussian around the weighted sum of responses.
pub trait ObservationModel<A>: Send + Sync {
    fn observations(&self) -> &[f64];

    fn n_obs(&self) -> usize {
        self.observations().len()
    }

    /// Writes the response of `atom` at every observation into `out`.
    fn response(&self, atom: &A, out: &mut [f64]);

    /// Whether the atom yields a bounded kernel.
    fn atom_is_valid(&self, atom: &A) -> bool;

    /// Noise variance when it is held fixed; `None` when it is sampled.
    fn fixed_sigma2(&self) -> Option<f64>;

    fn samples_noise(&self) -> bool {
        self.fixed_sigma2().is_none()
    }
}

/// Gaussian regression `y_i = f(x_i) + eps_i` with `f` a kernel mixture.
#[derive(Debug, Clone)]
pub struct GaussianRegression<K> {
    pub data: RegressionDataset,
    pub kernel: K,
}

impl<K> GaussianRegression<K> {
    pub fn new<A>(data: RegressionDataset, kernel: K) -> Result<Self>
    where
        K: AtomKernel<A>,
    {
        if kernel.dim() != data.dim() {
            return Err(Error::param(format!(
                "kernel dimension {} does not match design dimension {}",
                kernel.dim(),
                data.dim()
            )));
        }
        Ok(Self { data, kernel })
    }
}

impl<A, K: AtomKernel<A>> ObservationModel<A> for GaussianRegression<K> {
    fn observations(&self) -> &[f64] {
        self.data.y()
    }

    fn response(&self, atom: &A, out: &mut [f64]) {
        let d = self.data.dim();
        for (o, x) in out.iter_mut().zip(self.data.points().chunks_exact(d)) {
            *o = self.kernel.eval(atom, x);
        }
    }

    fn atom_is_valid(&self, atom: &A) -> bool {
        self.kernel.sup_bound(atom).is_finite()
    }

    fn fixed_sigma2(&self) -> Option<f64> {
        None
    }
}

/// A model without observations: the likelihood is identically one, so the
/// sampler explores the prior. Used for prior-invariance checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatModel;

impl<A> ObservationModel<A> for FlatModel {
    fn observations(&self) -> &[f64] {
        &[]
    }

    fn response(&self, _atom: &A, _out: &mut [f64]) {}

    fn atom_is_valid(&self, _atom: &A) -> bool {
        true
    }

    fn fixed_sigma2(&self) -> Option<f64> {
        None
    }
}
