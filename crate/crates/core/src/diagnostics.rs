//! Convergence diagnostics: Geweke's Z on a chain functional, the staged
//! burn-in protocol, effective sample size, and a driver that runs a chain
//! until it passes them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::AtomPrior;
use crate::models::ObservationModel;
use crate::sampler::{Chain, ChainTrace, SamplerConfig};
use crate::SimRng;

/// Discard fractions tried by [`burn_in_protocol`], in order.
pub const DISCARD_FRACTIONS: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
pub const DEFAULT_FRAC_A: f64 = 0.1;
pub const DEFAULT_FRAC_B: f64 = 0.5;
const Z_CRITICAL: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GewekeResult {
    pub z: f64,
    pub frac_a: f64,
    pub frac_b: f64,
    pub passed: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Variance of the sample mean by overlapping batch means with batch length
/// `floor(sqrt(n))`, i.e. `S(0) / n` for the spectral density `S` at zero.
pub fn batch_means_var(x: &[f64]) -> f64 {
    let n = x.len();
    let b = ((n as f64).sqrt().floor() as usize).max(1);
    if n < 2 || b >= n {
        return f64::NAN;
    }
    let m = mean(x);
    let nb = n - b + 1;
    let mut window: f64 = x[..b].iter().sum();
    let mut ss = 0.0;
    for j in 0..nb {
        if j > 0 {
            window += x[j + b - 1] - x[j - 1];
        }
        let d = window / b as f64 - m;
        ss += d * d;
    }
    let var_batch = n as f64 * b as f64 * ss / ((n - b) as f64 * nb as f64);
    var_batch / n as f64
}

/// Monte Carlo standard error of the mean of a correlated series.
pub fn batch_means_se(x: &[f64]) -> f64 {
    batch_means_var(x).sqrt()
}

/// Geweke's Z comparing the mean of the first `frac_a` of the series with
/// the mean of the last `frac_b`.
pub fn geweke_z(series: &[f64], frac_a: f64, frac_b: f64) -> Result<GewekeResult> {
    if series.len() < 100 {
        return Err(Error::param(format!(
            "Geweke diagnostic needs at least 100 values, got {}",
            series.len()
        )));
    }
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(Error::param(format!(
            "window fractions must be positive with sum at most 1, got {frac_a} and {frac_b}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("series contains non-finite values"));
    }
    let n = series.len();
    let na = ((frac_a * n as f64).floor() as usize).max(2);
    let nb = ((frac_b * n as f64).floor() as usize).max(2);
    let a = &series[..na];
    let b = &series[n - nb..];
    let va = batch_means_var(a);
    let vb = batch_means_var(b);
    let denom = (va + vb).sqrt();
    if !(denom > 0.0) {
        return Err(Error::DegenerateSeries(
            "both Geweke windows have zero variance".into(),
        ));
    }
    let z = (mean(a) - mean(b)) / denom;
    Ok(GewekeResult {
        z,
        frac_a,
        frac_b,
        passed: z.abs() < Z_CRITICAL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurnInDecision {
    /// First passing fraction, or the last one tried when none passed.
    pub discard_fraction: f64,
    pub converged: bool,
    /// One result per fraction tried.
    pub stages: Vec<GewekeResult>,
}

/// Applies [`geweke_z`] after discarding 0, 10, 20, 30 and 40 percent of the
/// series, stopping at the first pass.
pub fn burn_in_protocol(series: &[f64]) -> Result<BurnInDecision> {
    if series.len() < 1000 {
        return Err(Error::param(format!(
            "burn-in protocol needs at least 1000 values, got {}",
            series.len()
        )));
    }
    let mut stages = Vec::new();
    for &f in &DISCARD_FRACTIONS {
        let start = (f * series.len() as f64).floor() as usize;
        let g = geweke_z(&series[start..], DEFAULT_FRAC_A, DEFAULT_FRAC_B)?;
        stages.push(g);
        if g.passed {
            return Ok(BurnInDecision {
                discard_fraction: f,
                converged: true,
                stages,
            });
        }
    }
    Ok(BurnInDecision {
        discard_fraction: DISCARD_FRACTIONS[DISCARD_FRACTIONS.len() - 1],
        converged: false,
        stages,
    })
}

/// Effective sample size `n / (1 + 2 sum rho_k)` with the autocorrelation sum
/// truncated by Geyer's initial positive sequence; clamped to `(0, n]`.
pub fn ess(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 10 {
        return Err(Error::param(format!("ESS needs at least 10 values, got {n}")));
    }
    let m = mean(series);
    let centred: Vec<f64> = series.iter().map(|v| v - m).collect();
    let autocov = |k: usize| -> f64 {
        centred[..n - k]
            .iter()
            .zip(&centred[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let g0 = autocov(0);
    if !(g0 > 0.0) || !g0.is_finite() {
        return Err(Error::DegenerateSeries("series has zero variance".into()));
    }
    // tau = -1 + 2 sum_m Gamma_m / gamma_0, Gamma_m = gamma_{2m} + gamma_{2m+1}
    let mut sum_pairs = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = if k == 0 {
            g0 + autocov(1)
        } else {
            autocov(2 * k) + autocov(2 * k + 1)
        };
        if pair <= 0.0 {
            break;
        }
        sum_pairs += pair;
        k += 1;
    }
    let tau = -1.0 + 2.0 * sum_pairs / g0;
    let e = n as f64 / tau;
    Ok(if e.is_finite() && e > 0.0 {
        e.min(n as f64)
    } else {
        n as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceOptions {
    /// Sweeps before the first burn-in check.
    pub initial_iterations: usize,
    /// Sweeps added per extension while the ESS target is unmet.
    pub extension: usize,
    /// Cap on sweeps per chain.
    pub max_iterations: usize,
    pub target_ess: f64,
    pub restart_cap: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            initial_iterations: 2000,
            extension: 1000,
            max_iterations: 200_000,
            target_ess: 1000.0,
            restart_cap: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub burn_in: BurnInDecision,
    /// Sweeps discarded as burn-in.
    pub burn_in_iterations: usize,
    pub iterations: usize,
    pub kept_records: usize,
    pub ess: f64,
    pub ess_reached: bool,
    pub restarts: usize,
}

/// A converged chain: the full trace of the accepted attempt and the index
/// of its first kept record.
#[derive(Debug, Clone)]
pub struct ConvergedRun<A> {
    pub trace: ChainTrace<A>,
    pub first_kept: usize,
    pub report: ConvergenceReport,
}

impl<A> ConvergedRun<A> {
    /// Snapshots taken after burn-in.
    pub fn kept_snapshots(&self) -> impl Iterator<Item = &crate::sampler::Snapshot<A>> {
        let start = self.report.burn_in_iterations;
        self.trace.snapshots.iter().filter(move |s| s.iter > start)
    }
}

/// Runs a chain in blocks until the burn-in protocol passes on the
/// log-likelihood and the post-burn-in ESS reaches the target (or the
/// iteration cap is hit). A chain failing the protocol is restarted from a
/// fresh prior draw, at most `restart_cap` times.
pub fn run_until_converged<P: AtomPrior, M: ObservationModel<P::Atom>>(
    config: &SamplerConfig,
    prior: P,
    model: &M,
    rng: &mut SimRng,
    opts: &ConvergenceOptions,
) -> Result<ConvergedRun<P::Atom>> {
    config.validate()?;
    if opts.max_iterations < opts.initial_iterations {
        return Err(Error::Convergence {
            message: format!(
                "iteration cap {} is below the burn-in block of {} sweeps",
                opts.max_iterations, opts.initial_iterations
            ),
            partial_traces: Vec::new(),
        });
    }
    if opts.initial_iterations / config.thinning + 1 < 1000 {
        return Err(Error::param(
            "the initial block must yield at least 1000 trace records",
        ));
    }
    if opts.extension == 0 && opts.target_ess > 0.0 {
        return Err(Error::param("extension block must be at least 1 sweep"));
    }
    let mut partial = Vec::new();
    for restart in 0..=opts.restart_cap {
        let mut chain = Chain::new(config.clone(), prior.clone(), model, rng.split())?;
        chain.run(opts.initial_iterations)?;
        let ll = chain.trace().loglik();
        let decision = burn_in_protocol(&ll)?;
        if !decision.converged {
            partial.push(ll);
            continue;
        }
        let first_kept = (decision.discard_fraction * ll.len() as f64).floor() as usize;
        let burn_in_iterations = chain.trace().records[first_kept].iter;
        let mut e = ess(&ll[first_kept..])?;
        while e < opts.target_ess && chain.iteration() < opts.max_iterations {
            let more = opts.extension.min(opts.max_iterations - chain.iteration());
            chain.run(more)?;
            e = ess(&chain.trace().loglik()[first_kept..])?;
        }
        let iterations = chain.iteration();
        let trace = chain.into_trace();
        let kept_records = trace.records.len() - first_kept;
        return Ok(ConvergedRun {
            trace,
            first_kept,
            report: ConvergenceReport {
                burn_in: decision,
                burn_in_iterations,
                iterations,
                kept_records,
                ess: e,
                ess_reached: e >= opts.target_ess,
                restarts: restart,
            },
        });
    }
    Err(Error::Convergence {
        message: format!(
            "chain failed the burn-in protocol after {} restarts",
            opts.restart_cap
        ),
        partial_traces: partial,
    })
}
