//! Mother functions and the location-scale / location-modulation kernel
//! families.
//!
//! A location-scale kernel is `K_A(x - mu) = g(A^{-1}(x - mu))`; a
//! location-modulation kernel is `g(x - mu) cos(sum_i xi_i (x_i - mu_i) + phi)`.
//! Kernels are not normalised.

mod symmlet;

pub use symmlet::{Symmlet8Table, SYM8_LOWPASS};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::ParticleMeasure;

/// Condition number above which a dilation matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotherFunction {
    /// `g(x) = exp(-|x|^2 / 2)`.
    Gaussian,
    /// Symmlet-8 mother wavelet, support `[-7.5, 7.5]`. One-dimensional only.
    Symmlet8,
}

impl std::str::FromStr for MotherFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(MotherFunction::Gaussian),
            "symmlet8" => Ok(MotherFunction::Symmlet8),
            other => Err(Error::param(format!(
                "unknown kernel {other:?}; valid kernels: gaussian, symmlet8"
            ))),
        }
    }
}

impl std::fmt::Display for MotherFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MotherFunction::Gaussian => "gaussian",
            MotherFunction::Symmlet8 => "symmlet8",
        })
    }
}

impl MotherFunction {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MotherFunction::Gaussian => (-0.5 * x * x).exp(),
            MotherFunction::Symmlet8 => Symmlet8Table::get().eval(x),
        }
    }

    pub fn eval_nd(&self, x: &[f64]) -> Result<f64> {
        match (self, x.len()) {
            (_, 1) => Ok(self.eval(x[0])),
            (MotherFunction::Gaussian, _) => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Ok((-0.5 * r2).exp())
            }
            (MotherFunction::Symmlet8, d) => Err(Error::param(format!(
                "symmlet8 mother function is one-dimensional, got d={d}"
            ))),
        }
    }

    /// `sup |g|`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            MotherFunction::Gaussian => 1.0,
            MotherFunction::Symmlet8 => Symmlet8Table::get().sup_abs(),
        }
    }
}

/// psi of the Symmlet-8 wavelet; zero outside `[-7.5, 7.5]`.
pub fn eval_symmlet8(x: f64) -> f64 {
    Symmlet8Table::get().eval(x)
}

/// General `d`-dimensional location-scale atom with a dense dilation matrix
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationScaleAtom {
    pub dilation: Vec<f64>,
    pub mu: Vec<f64>,
}

impl LocationScaleAtom {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    fn matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if self.dilation.len() != d * d {
            return Err(Error::param(format!(
                "dilation has {} entries, expected {}",
                self.dilation.len(),
                d * d
            )));
        }
        Ok(DMatrix::from_row_slice(d, d, &self.dilation))
    }

    /// `A^{-1}`, refusing ill-conditioned dilations.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let a = self.matrix()?;
        let sv = a.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        if !(min > 0.0) || max / min > MAX_CONDITION {
            return Err(Error::Numeric(format!(
                "dilation matrix is singular (condition number {:e})",
                max / min
            )));
        }
        a.try_inverse()
            .ok_or_else(|| Error::Numeric("dilation matrix is not invertible".into()))
    }
}

/// One-dimensional location-scale atom `g(scale * (x - mu))`, i.e. `A = 1/scale`.
///
/// `component` is the latent indicator of the scale-prior mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleAtom {
    pub mu: f64,
    pub scale: f64,
    pub component: usize,
}

/// General location-modulation atom.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationModulationAtom {
    pub xi: Vec<f64>,
    pub mu: Vec<f64>,
    pub phi: f64,
}

/// One-dimensional location-modulation atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationAtom {
    pub mu: f64,
    pub xi: f64,
    pub phi: f64,
}

/// Shearlet-type dilation `[[1, s], [0, 1]] * diag(a, sqrt(a))`, `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearletMatrix {
    pub a: f64,
    pub s: f64,
}

impl ShearletMatrix {
    /// `[[a, s sqrt(a)], [0, sqrt(a)]]`, row-major.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let ra = self.a.sqrt();
        [[self.a, self.s * ra], [0.0, ra]]
    }

    /// `[[1/a, -s/a], [0, 1/sqrt(a)]]`.
    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        if !(self.a > 0.0) || !self.a.is_finite() || !self.s.is_finite() {
            return Err(Error::Numeric(format!(
                "shearlet dilation needs finite a > 0 and finite s, got a={} s={}",
                self.a, self.s
            )));
        }
        Ok([[1.0 / self.a, -self.s / self.a], [0.0, 1.0 / self.a.sqrt()]])
    }
}

/// Two-dimensional location-scale atom with a shearlet-type dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearletAtom {
    pub mu: [f64; 2],
    pub shear: ShearletMatrix,
}

impl ShearletAtom {
    pub fn as_location_scale(&self) -> LocationScaleAtom {
        let m = self.shear.matrix();
        LocationScaleAtom {
            dilation: vec![m[0][0], m[0][1], m[1][0], m[1][1]],
            mu: self.mu.to_vec(),
        }
    }
}

/// `g(A^{-1}(x - mu))`.
pub fn eval_location_scale(g: MotherFunction, atom: &LocationScaleAtom, x: &[f64]) -> Result<f64> {
    if x.len() != atom.dim() {
        return Err(Error::param(format!(
            "point has dimension {}, atom has {}",
            x.len(),
            atom.dim()
        )));
    }
    let inv = atom.inverse()?;
    let d = atom.dim();
    let z: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| inv[(i, j)] * (x[j] - atom.mu[j])).sum())
        .collect();
    g.eval_nd(&z)
}

/// `g(x - mu) cos(sum_i xi_i (x_i - mu_i) + phi)`.
pub fn eval_location_modulation(
    g: MotherFunction,
    atom: &LocationModulationAtom,
    x: &[f64],
) -> Result<f64> {
    if x.len() != atom.mu.len() || atom.xi.len() != atom.mu.len() {
        return Err(Error::param(format!(
            "dimension mismatch: x {}, mu {}, xi {}",
            x.len(),
            atom.mu.len(),
            atom.xi.len()
        )));
    }
    let z: Vec<f64> = x.iter().zip(&atom.mu).map(|(a, b)| a - b).collect();
    let phase: f64 = atom.xi.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + atom.phi;
    Ok(g.eval_nd(&z)? * phase.cos())
}

/// A kernel family bound to an atom type: evaluation at a point plus a
/// per-atom sup-norm bound used to guard mixture convergence.
pub trait AtomKernel<A>: Send + Sync {
    fn dim(&self) -> usize;

    /// `K(atom; x)`; `x.len() == self.dim()` is the caller's responsibility.
    fn eval(&self, atom: &A, x: &[f64]) -> f64;

    /// Upper bound on `sup_x |K(atom; x)|`; infinite for invalid atoms.
    fn sup_bound(&self, atom: &A) -> f64;
}

/// How the scale of a [`ScaleAtom`] enters the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConvention {
    /// `g(scale * (x - mu))`.
    #[default]
    InverseBandwidth,
    /// `g(sqrt(scale) * (x - mu))`; for the Gaussian mother this is
    /// `exp(-scale (x - mu)^2 / 2)`.
    Precision,
}

/// One-dimensional location-scale family over [`ScaleAtom`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationScale1d {
    pub mother: MotherFunction,
    pub convention: ScaleConvention,
}

impl LocationScale1d {
    pub fn new(mother: MotherFunction) -> Self {
        Self {
            mother,
            convention: ScaleConvention::InverseBandwidth,
        }
    }

    pub fn with_convention(mother: MotherFunction, convention: ScaleConvention) -> Self {
        Self { mother, convention }
    }

    /// Multiplier applied to `x - mu`.
    #[inline]
    pub fn dilation(&self, atom: &ScaleAtom) -> f64 {
        match self.convention {
            ScaleConvention::InverseBandwidth => atom.scale,
            ScaleConvention::Precision => atom.scale.sqrt(),
        }
    }

    #[inline]
    pub fn eval_at(&self, atom: &ScaleAtom, x: f64) -> f64 {
        self.mother.eval(self.dilation(atom) * (x - atom.mu))
    }
}

impl AtomKernel<ScaleAtom> for LocationScale1d {
    fn dim(&self) -> usize {
        1
    }

    #[inline]
    fn eval(&self, atom: &ScaleAtom, x: &[f64]) -> f64 {
        self.eval_at(atom, x[0])
    }

    fn sup_bound(&self, atom: &ScaleAtom) -> f64 {
        if atom.scale > 0.0 && atom.scale.is_finite() && atom.scale <= MAX_CONDITION
            && atom.mu.is_finite()
        {
            self.mother.sup_norm()
        } else {
            f64::INFINITY
        }
    }
}

/// One-dimensional location-modulation family over [`ModulationAtom`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationModulation1d {
    pub mother: MotherFunction,
}

impl LocationModulation1d {
    #[inline]
    pub fn eval_at(&self, atom: &ModulationAtom, x: f64) -> f64 {
        let z = x - atom.mu;
        self.mother.eval(z) * (atom.xi * z + atom.phi).cos()
    }
}

impl AtomKernel<ModulationAtom> for LocationModulation1d {
    fn dim(&self) -> usize {
        1
    }

    #[inline]
    fn eval(&self, atom: &ModulationAtom, x: &[f64]) -> f64 {
        self.eval_at(atom, x[0])
    }

    fn sup_bound(&self, atom: &ModulationAtom) -> f64 {
        if atom.mu.is_finite()
            && atom.xi.is_finite()
            && (0.0..=std::f64::consts::FRAC_PI_2).contains(&atom.phi)
        {
            self.mother.sup_norm()
        } else {
            f64::INFINITY
        }
    }
}

/// Two-dimensional anisotropic Gaussian family over [`ShearletAtom`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShearletGaussian;

impl ShearletGaussian {
    #[inline]
    pub fn eval_at(&self, atom: &ShearletAtom, x: [f64; 2]) -> f64 {
        let a = atom.shear.a;
        let ra = a.sqrt();
        let dx = x[0] - atom.mu[0];
        let dy = x[1] - atom.mu[1];
        let z0 = (dx - atom.shear.s * dy) / a;
        let z1 = dy / ra;
        (-0.5 * (z0 * z0 + z1 * z1)).exp()
    }
}

impl AtomKernel<ShearletAtom> for ShearletGaussian {
    fn dim(&self) -> usize {
        2
    }

    #[inline]
    fn eval(&self, atom: &ShearletAtom, x: &[f64]) -> f64 {
        self.eval_at(atom, [x[0], x[1]])
    }

    fn sup_bound(&self, atom: &ShearletAtom) -> f64 {
        let ok = atom.shear.inverse().is_ok() && atom.mu.iter().all(|m| m.is_finite());
        // condition number of [[a, s sqrt a],[0, sqrt a]]
        let cond_ok = ok && {
            let m = atom.shear.matrix();
            let fro2: f64 = m.iter().flatten().map(|v| v * v).sum();
            let det = (m[0][0] * m[1][1]).abs();
            // sigma_max/sigma_min from the 2x2 singular values
            let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
            let smax = ((fro2 + disc) / 2.0).sqrt();
            let smin = det / smax;
            smin > 0.0 && smax / smin <= MAX_CONDITION
        };
        if cond_ok {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

/// General location-scale family over [`LocationScaleAtom`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationScaleNd {
    pub mother: MotherFunction,
    pub dim: usize,
}

impl AtomKernel<LocationScaleAtom> for LocationScaleNd {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, atom: &LocationScaleAtom, x: &[f64]) -> f64 {
        eval_location_scale(self.mother, atom, x).unwrap_or(f64::NAN)
    }

    fn sup_bound(&self, atom: &LocationScaleAtom) -> f64 {
        if atom.dim() == self.dim && atom.inverse().is_ok() {
            self.mother.sup_norm()
        } else {
            f64::INFINITY
        }
    }
}

fn check_atoms<A, K: AtomKernel<A>>(measure: &ParticleMeasure<A>, kernel: &K) -> Result<()> {
    for (i, atom) in measure.atoms.iter().enumerate() {
        if !kernel.sup_bound(atom).is_finite() {
            return Err(Error::param(format!(
                "atom {i} has an unbounded kernel; the mixture is not guaranteed to converge"
            )));
        }
    }
    Ok(())
}

/// `f(x) = sqrt(T/p) * sum_i J_i K(X_i; x)`.
pub fn mixture_eval<A, K: AtomKernel<A>>(
    measure: &ParticleMeasure<A>,
    kernel: &K,
    x: &[f64],
) -> Result<f64> {
    if x.len() != kernel.dim() {
        return Err(Error::param(format!(
            "point has dimension {}, kernel has {}",
            x.len(),
            kernel.dim()
        )));
    }
    check_atoms(measure, kernel)?;
    Ok(mixture_sum(measure, kernel, x))
}

fn mixture_sum<A, K: AtomKernel<A>>(measure: &ParticleMeasure<A>, kernel: &K, x: &[f64]) -> f64 {
    let s: f64 = measure
        .jumps
        .iter()
        .zip(&measure.atoms)
        .map(|(j, atom)| j * kernel.eval(atom, x))
        .sum();
    measure.weight_factor() * s
}

/// [`mixture_eval`] over a list of points.
pub fn mixture_eval_grid<A, K: AtomKernel<A>>(
    measure: &ParticleMeasure<A>,
    kernel: &K,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if let Some(bad) = points.iter().find(|x| x.len() != kernel.dim()) {
        return Err(Error::param(format!(
            "point has dimension {}, kernel has {}",
            bad.len(),
            kernel.dim()
        )));
    }
    check_atoms(measure, kernel)?;
    Ok(points.iter().map(|x| mixture_sum(measure, kernel, x)).collect())
}
