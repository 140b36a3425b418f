//! CT reconstruction experiment: Shepp-Logan phantom, noisy Radon data and a
//! shearlet-Gaussian mixture posterior mean image.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{run_until_converged, ConvergenceOptions, ConvergenceReport};
use crate::error::{ensure_positive, Error, Result};
use crate::kernels::{ShearletAtom, ShearletGaussian};
use crate::measures::{std_normal, ShearletPrior};
use crate::models::{phantom_radon, radon_grid, shepp_logan, Image, RadonDataset, RadonModel};
use crate::sampler::{SamplerConfig, Snapshot};
use crate::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CtSpec {
    /// Pixels per side of the reconstructed image.
    pub resolution: usize,
    /// Radii per angle.
    pub n_radii: usize,
    pub n_angles: usize,
    pub sigma2: f64,
    pub tau: f64,
    pub sigma_a2: f64,
    pub sigma_s2: f64,
    pub sampler: SamplerConfig,
    pub convergence: ConvergenceOptions,
    pub seed: u64,
}

impl Default for CtSpec {
    fn default() -> Self {
        Self {
            resolution: 32,
            n_radii: 32,
            n_angles: 16,
            sigma2: 0.1,
            tau: 0.25,
            sigma_a2: 0.25,
            sigma_s2: 0.25,
            sampler: SamplerConfig {
                snapshot_every: 10,
                burn_in: 1000,
                update_sigma2: false,
                ..SamplerConfig::default()
            },
            convergence: ConvergenceOptions {
                initial_iterations: 2000,
                extension: 1000,
                max_iterations: 4000,
                target_ess: 200.0,
                restart_cap: 1,
            },
            seed: 1,
        }
    }
}

impl CtSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 8 {
            return Err(Error::param("CT resolution must be at least 8"));
        }
        if self.n_radii == 0 || self.n_angles == 0 {
            return Err(Error::param("CT needs at least one radius and one angle"));
        }
        ensure_positive("sigma2", self.sigma2)?;
        ShearletPrior::new(self.tau, self.sigma_a2, self.sigma_s2)?;
        if self.sampler.snapshot_every == 0 {
            return Err(Error::param("CT reconstruction needs snapshot_every >= 1"));
        }
        self.sampler.validate()
    }

    pub fn n_obs(&self) -> usize {
        self.n_radii * self.n_angles
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtReport {
    pub resolution: usize,
    pub n_obs: usize,
    pub sigma2: f64,
    pub rmse: f64,
    /// RMSE of the all-zero image against the phantom.
    pub zero_rmse: f64,
    pub snapshots_used: usize,
    pub convergence: ConvergenceReport,
    pub acc_locations: Vec<f64>,
    pub acc_jumps: f64,
    pub acc_total_mass: f64,
}

#[derive(Debug, Clone)]
pub struct CtOutcome {
    pub report: CtReport,
    pub phantom: Image,
    pub reconstruction: Image,
    pub data: RadonDataset,
}

/// Phantom sinogram on the standard grid plus Gaussian noise of variance
/// `sigma2`.
pub fn synthesize_radon(n_radii: usize, n_angles: usize, sigma2: f64, rng: &mut SimRng) -> Result<RadonDataset> {
    let (r, theta) = radon_grid(n_radii, n_angles)?;
    let mut data = RadonDataset::from_fn(r, theta, sigma2, phantom_radon)?;
    let sd = sigma2.sqrt();
    for y in data.y_mut() {
        *y += sd * std_normal(rng);
    }
    Ok(data)
}

/// Posterior mean image over snapshots, evaluated at pixel centres.
pub fn posterior_image<'a>(
    resolution: usize,
    snapshots: impl Iterator<Item = &'a Snapshot<ShearletAtom>>,
) -> Result<(Image, usize)> {
    let kernel = ShearletGaussian;
    let mut acc = vec![0.0; resolution * resolution];
    let mut used = 0usize;
    let centers: Vec<[f64; 2]> = {
        let probe = Image::new(resolution, vec![0.0; resolution * resolution])?;
        (0..resolution * resolution)
            .map(|k| {
                let (x, y) = probe.pixel_center(k / resolution, k % resolution);
                [x, y]
            })
            .collect()
    };
    for s in snapshots {
        for (atom, w) in s.atoms.iter().zip(&s.weights) {
            for (a, c) in acc.iter_mut().zip(&centers) {
                *a += w * kernel.eval_at(atom, *c);
            }
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::param("no snapshots after burn-in"));
    }
    acc.iter_mut().for_each(|v| *v /= used as f64);
    Ok((Image::new(resolution, acc)?, used))
}

pub fn run_ct(spec: &CtSpec) -> Result<CtOutcome> {
    spec.validate()?;
    let mut data_rng = SimRng::stream(spec.seed, 0);
    let mut chain_rng = SimRng::stream(spec.seed, 1);
    let data = synthesize_radon(spec.n_radii, spec.n_angles, spec.sigma2, &mut data_rng)?;
    let model = RadonModel::new(data);
    let prior = ShearletPrior::new(spec.tau, spec.sigma_a2, spec.sigma_s2)?;
    let mut sampler = spec.sampler.clone();
    sampler.update_sigma2 = false;
    let run = run_until_converged(&sampler, prior, &model, &mut chain_rng, &spec.convergence)?;
    let (reconstruction, used) = posterior_image(spec.resolution, run.kept_snapshots())?;
    let phantom = shepp_logan(spec.resolution)?;
    let zero = Image::new(spec.resolution, vec![0.0; spec.resolution * spec.resolution])?;
    let t = &run.trace;
    let report = CtReport {
        resolution: spec.resolution,
        n_obs: spec.n_obs(),
        sigma2: spec.sigma2,
        rmse: reconstruction.rmse(&phantom)?,
        zero_rmse: zero.rmse(&phantom)?,
        snapshots_used: used,
        convergence: run.report.clone(),
        acc_locations: t.locations.iter().map(|b| b.rate()).collect(),
        acc_jumps: t.jumps.rate(),
        acc_total_mass: t.total_mass.rate(),
    };
    Ok(CtOutcome {
        report,
        phantom,
        reconstruction,
        data: model.data,
    })
}
