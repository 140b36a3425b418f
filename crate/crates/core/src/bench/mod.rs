//! Regression benchmark harness: test functions, noise calibration,
//! replications with regenerated noise, RMSE and credible bands.

pub mod ct;
mod functions;
pub mod report;

pub use ct::{run_ct, CtOutcome, CtReport, CtSpec};
pub use functions::{eval_test_function, uniform_design, TestFunction};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{run_until_converged, ConvergenceOptions, ConvergenceReport, ConvergedRun};
use crate::error::{ensure_positive, Error, Result};
use crate::kernels::{LocationScale1d, MotherFunction, ScaleAtom, ScaleConvention};
use crate::measures::{std_normal, GammaComponent, ScalePrior};
use crate::models::{GaussianRegression, RegressionDataset};
use crate::sampler::{InverseGammaPrior, SamplerConfig};
use crate::SimRng;

/// `sd(f0) / rsnr` with the population standard deviation (denominator `n`).
pub fn calibrate_noise(f0: &[f64], rsnr: f64) -> Result<f64> {
    ensure_positive("rsnr", rsnr)?;
    if f0.len() < 2 {
        return Err(Error::param("noise calibration needs at least 2 design points"));
    }
    let n = f0.len() as f64;
    let m = f0.iter().sum::<f64>() / n;
    let var = f0.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateSignal(
            "test function is constant on the design".into(),
        ));
    }
    Ok(var.sqrt() / rsnr)
}

pub fn rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || estimate.is_empty() {
        return Err(Error::param(format!(
            "RMSE needs equal non-empty lengths, got {} and {}",
            estimate.len(),
            truth.len()
        )));
    }
    let ss: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / estimate.len() as f64).sqrt())
}

/// Posterior mean and credible band over a common grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Number of curves kept for the envelope.
    pub kept: usize,
}

/// Keeps the `level` fraction of curves closest in l2 to the mean curve and
/// returns their pointwise envelope.
pub fn credible_bands(curves: &[Vec<f64>], level: f64) -> Result<Bands> {
    if curves.len() < 20 {
        return Err(Error::param(format!(
            "credible bands need at least 20 curves, got {}",
            curves.len()
        )));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::param(format!("band level must lie in (0, 1], got {level}")));
    }
    let g = curves[0].len();
    if g == 0 || curves.iter().any(|c| c.len() != g) {
        return Err(Error::param("curves must share a non-empty grid"));
    }
    let m = curves.len() as f64;
    let mut mean = vec![0.0; g];
    for c in curves {
        for (a, v) in mean.iter_mut().zip(c) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= m);
    let mut dist: Vec<(f64, usize)> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d: f64 = c.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let kept = ((level * m).round() as usize).clamp(1, curves.len());
    let mut lower = vec![f64::INFINITY; g];
    let mut upper = vec![f64::NEG_INFINITY; g];
    for &(_, i) in &dist[..kept] {
        for ((lo, hi), v) in lower.iter_mut().zip(upper.iter_mut()).zip(&curves[i]) {
            *lo = lo.min(*v);
            *hi = hi.max(*v);
        }
    }
    Ok(Bands {
        mean,
        lower,
        upper,
        kept,
    })
}

/// Prior over one-dimensional location-scale atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalePriorSpec {
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub components: Vec<GammaComponent>,
    pub convention: ScaleConvention,
}

impl Default for ScalePriorSpec {
    fn default() -> Self {
        Self {
            mu_mean: 0.5,
            mu_sd: 0.3,
            components: vec![
                GammaComponent {
                    shape: 30.0,
                    rate: 0.06,
                },
                GammaComponent {
                    shape: 2.0,
                    rate: 0.04,
                },
            ],
            convention: ScaleConvention::InverseBandwidth,
        }
    }
}

impl ScalePriorSpec {
    /// The alternative component pair `Ga(20, 0.2)` and `Ga(2, 0.1)`.
    pub fn alternative_components() -> Vec<GammaComponent> {
        vec![
            GammaComponent {
                shape: 20.0,
                rate: 0.2,
            },
            GammaComponent {
                shape: 2.0,
                rate: 0.1,
            },
        ]
    }

    pub fn prior(&self) -> Result<ScalePrior> {
        ScalePrior::new(self.mu_mean, self.mu_sd, self.components.clone())
    }

    pub fn kernel(&self, mother: MotherFunction) -> LocationScale1d {
        LocationScale1d::with_convention(mother, self.convention)
    }
}

/// Posterior summaries of a converged regression run on its design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub x: Vec<f64>,
    pub bands: Bands,
    pub snapshots_used: usize,
    pub mean_sigma2: f64,
}

/// Posterior mean and band over the kept snapshots of a run.
pub fn summarize_fit(
    run: &ConvergedRun<ScaleAtom>,
    x: Vec<f64>,
    level: f64,
) -> Result<RegressionFit> {
    let curves: Vec<Vec<f64>> = run.kept_snapshots().map(|s| s.fitted.clone()).collect();
    let bands = credible_bands(&curves, level)?;
    let kept = &run.trace.records[run.first_kept..];
    let mean_sigma2 = kept.iter().map(|r| r.sigma2).sum::<f64>() / kept.len() as f64;
    Ok(RegressionFit {
        x,
        snapshots_used: curves.len(),
        bands,
        mean_sigma2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSpec {
    pub function: TestFunction,
    pub n: usize,
    pub rsnr: f64,
    pub replications: usize,
    pub kernel: MotherFunction,
    pub prior: ScalePriorSpec,
    pub sampler: SamplerConfig,
    pub convergence: ConvergenceOptions,
    pub band_level: f64,
    /// Replaces the calibrated noise standard deviation.
    pub noise_sd: Option<f64>,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            function: TestFunction::Blip,
            n: 128,
            rsnr: 3.0,
            replications: 10,
            kernel: MotherFunction::Gaussian,
            prior: ScalePriorSpec::default(),
            sampler: benchmark_sampler(),
            convergence: regression_convergence(),
            band_level: 0.95,
            noise_sd: None,
            seed: 1,
        }
    }
}

/// Sampler defaults for the regression benchmark: a vague noise prior, since
/// the noise level is tied to the signal through the RSNR.
pub fn benchmark_sampler() -> SamplerConfig {
    let mut c = SamplerConfig {
        snapshot_every: 5,
        burn_in: 1000,
        ..SamplerConfig::default()
    };
    c.priors.sigma2 = InverseGammaPrior {
        shape: 0.01,
        scale: 1e-4,
    };
    c
}

/// Convergence budget for desk-scale regression runs.
pub fn regression_convergence() -> ConvergenceOptions {
    ConvergenceOptions {
        initial_iterations: 2000,
        extension: 2000,
        max_iterations: 10_000,
        target_ess: 250.0,
        restart_cap: 2,
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::param(format!("design size n must be at least 8, got {}", self.n)));
        }
        if self.replications == 0 {
            return Err(Error::param("replications must be at least 1"));
        }
        ensure_positive("rsnr", self.rsnr)?;
        if let Some(s) = self.noise_sd {
            ensure_positive("noise_sd", s)?;
        }
        if !(self.band_level > 0.0 && self.band_level <= 1.0) {
            return Err(Error::param("band_level must lie in (0, 1]"));
        }
        if self.sampler.snapshot_every == 0 {
            return Err(Error::param("benchmark needs snapshot_every >= 1"));
        }
        self.sampler.validate()?;
        self.prior.prior()?;
        if self.kernel == MotherFunction::Symmlet8 && self.prior.components.is_empty() {
            return Err(Error::param("scale prior needs components"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub index: usize,
    pub rmse: Option<f64>,
    /// Fraction of design points where the truth lies inside the band.
    pub coverage: Option<f64>,
    pub error: Option<String>,
    pub convergence: Option<ConvergenceReport>,
    pub acc_locations: f64,
    pub acc_jumps: f64,
    pub acc_total_mass: f64,
    pub mean_sigma2: Option<f64>,
    #[serde(skip)]
    pub fit: Option<RegressionFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub function: TestFunction,
    pub n: usize,
    pub rsnr: f64,
    pub noise_sd: f64,
    pub kernel: MotherFunction,
    pub replications: Vec<ReplicationResult>,
    /// Over replications that converged.
    pub mean_rmse: f64,
    pub mc_stderr: f64,
    pub failed: usize,
    pub mean_acc_jumps: f64,
    pub mean_acc_locations: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
    #[serde(skip)]
    pub x: Vec<f64>,
    #[serde(skip)]
    pub f0: Vec<f64>,
}

fn run_replication(
    spec: &BenchmarkSpec,
    index: usize,
    x: &[f64],
    f0: &[f64],
    sigma: f64,
) -> ReplicationResult {
    let mut noise_rng = SimRng::stream(spec.seed, 2 * index as u64);
    let mut chain_rng = SimRng::stream(spec.seed, 2 * index as u64 + 1);
    let y: Vec<f64> = f0.iter().map(|f| f + sigma * std_normal(&mut noise_rng)).collect();
    let mut out = ReplicationResult {
        index,
        rmse: None,
        coverage: None,
        error: None,
        convergence: None,
        acc_locations: f64::NAN,
        acc_jumps: f64::NAN,
        acc_total_mass: f64::NAN,
        mean_sigma2: None,
        fit: None,
    };
    let mut attempt = || -> Result<(ConvergedRun<ScaleAtom>, RegressionFit)> {
        let data = RegressionDataset::new(x.to_vec(), 1, y.clone(), 1.0)?;
        let model = GaussianRegression::new(data, spec.prior.kernel(spec.kernel))?;
        let run = run_until_converged(
            &spec.sampler,
            spec.prior.prior()?,
            &model,
            &mut chain_rng,
            &spec.convergence,
        )?;
        let fit = summarize_fit(&run, x.to_vec(), spec.band_level)?;
        Ok((run, fit))
    };
    match attempt() {
        Ok((run, fit)) => {
            let t = &run.trace;
            let loc = t.locations.iter().fold((0u64, 0u64), |a, b| (a.0 + b.accepted, a.1 + b.proposed));
            out.acc_locations = loc.0 as f64 / loc.1.max(1) as f64;
            out.acc_jumps = t.jumps.rate();
            out.acc_total_mass = t.total_mass.rate();
            out.rmse = rmse(&fit.bands.mean, f0).ok();
            let inside = f0
                .iter()
                .zip(fit.bands.lower.iter().zip(&fit.bands.upper))
                .filter(|(f, (lo, hi))| *lo <= *f && *f <= *hi)
                .count();
            out.coverage = Some(inside as f64 / f0.len() as f64);
            out.mean_sigma2 = Some(fit.mean_sigma2);
            out.convergence = Some(run.report.clone());
            out.fit = Some(fit);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Runs the replications in parallel on the current rayon pool. Design and
/// truth are fixed; only the noise is regenerated per replication.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    spec.validate()?;
    let start = Instant::now();
    let x = uniform_design(spec.n);
    let f0: Vec<f64> = x.iter().map(|&v| spec.function.eval(v)).collect();
    let sigma = match spec.noise_sd {
        Some(s) => s,
        None => calibrate_noise(&f0, spec.rsnr)?,
    };
    let results: Vec<ReplicationResult> = (0..spec.replications)
        .into_par_iter()
        .map(|r| run_replication(spec, r, &x, &f0, sigma))
        .collect();
    let ok: Vec<f64> = results.iter().filter_map(|r| r.rmse).collect();
    let failed = results.len() - ok.len();
    let (mean_rmse, mc_stderr) = mean_and_se(&ok);
    let mean_of = |f: &dyn Fn(&ReplicationResult) -> f64| {
        let v: Vec<f64> = results.iter().filter(|r| r.rmse.is_some()).map(f).collect();
        mean_and_se(&v).0
    };
    let mean_acc_jumps = mean_of(&|r| r.acc_jumps);
    let mean_acc_locations = mean_of(&|r| r.acc_locations);
    Ok(BenchmarkReport {
        function: spec.function,
        n: spec.n,
        rsnr: spec.rsnr,
        noise_sd: sigma,
        kernel: spec.kernel,
        replications: results,
        mean_rmse,
        mc_stderr,
        failed,
        mean_acc_jumps,
        mean_acc_locations,
        wall_clock_secs: Some(start.elapsed().as_secs_f64()),
        x,
        f0,
    })
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
