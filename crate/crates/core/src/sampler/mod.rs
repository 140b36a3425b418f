//! Pólya-urn Gibbs sampler over the particle representation
//! `(C, X*, J, T)` plus noise variance, urn concentration `alpha` and the
//! weights of a mixture scale prior.
//!
//! One sweep runs, in order: allocations, atom locations, jumps, total mass,
//! then the enabled extensions (noise variance, `alpha`, mixture weights).

mod state;
mod steps;
pub mod trace;

pub use state::{ChainState, StepSizes};
pub use steps::{
    adapt_step_sizes, alpha_conditional_ln_density, alpha_mixture_ln_density, indicator_probabilities,
    step_allocations,
    step_alpha, step_jumps, step_locations, step_scale_mixture_weights, step_sigma2,
    step_total_mass, AllocationStats,
};
pub use trace::{read_trace_csv, write_trace_csv, ChainTrace, Snapshot, TraceRecord};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::measures::{AtomPrior, GammaComponent};
use crate::models::ObservationModel;
use crate::SimRng;

/// Inverse-Gamma prior `IG(shape, scale)` with density proportional to
/// `x^{-shape-1} exp(-scale / x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

/// Hyperpriors shared by every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperPriors {
    /// `Ga(shape, rate)` prior on the urn concentration `alpha`.
    pub alpha: GammaComponent,
    /// `Ga(shape, rate)` prior on the total mass `T`.
    pub total_mass: GammaComponent,
    pub sigma2: InverseGammaPrior,
    /// Symmetric Dirichlet concentration for mixture scale-prior weights.
    pub mixture_concentration: f64,
}

impl Default for HyperPriors {
    fn default() -> Self {
        Self {
            alpha: GammaComponent {
                shape: 2.0,
                rate: 0.5,
            },
            total_mass: GammaComponent {
                shape: 5.0,
                rate: 10.0,
            },
            sigma2: InverseGammaPrior {
                shape: 2.0,
                scale: 1.0,
            },
            mixture_concentration: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Number of particles.
    pub p: usize,
    /// Fresh auxiliary atoms offered to each particle in the allocation step.
    pub kappa0: usize,
    pub n_iterations: usize,
    /// Record every `thinning`-th sweep.
    pub thinning: usize,
    pub target_acceptance: f64,
    /// Step sizes adapt during the first `burn_in` sweeps only.
    pub adapt: bool,
    pub burn_in: usize,
    pub adapt_window: usize,
    /// Keep a snapshot of the measure every `snapshot_every` sweeps (0: never).
    pub snapshot_every: usize,
    pub update_alpha: bool,
    pub update_sigma2: bool,
    pub update_mixture_weights: bool,
    /// Start from this `alpha` instead of a prior draw.
    pub initial_alpha: Option<f64>,
    pub priors: HyperPriors,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            p: 150,
            kappa0: 3,
            n_iterations: 1000,
            thinning: 1,
            target_acceptance: 0.3,
            adapt: true,
            burn_in: 500,
            adapt_window: 50,
            snapshot_every: 0,
            update_alpha: true,
            update_sigma2: true,
            update_mixture_weights: true,
            initial_alpha: None,
            priors: HyperPriors::default(),
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::param("particle count p must be at least 1"));
        }
        if self.kappa0 == 0 {
            return Err(Error::param("kappa0 must be at least 1"));
        }
        if self.thinning == 0 {
            return Err(Error::param("thinning must be at least 1"));
        }
        if self.adapt_window == 0 {
            return Err(Error::param("adapt_window must be at least 1"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::param(format!(
                "target_acceptance must lie in (0, 1), got {}",
                self.target_acceptance
            )));
        }
        let h = &self.priors;
        ensure_positive("alpha prior shape", h.alpha.shape)?;
        ensure_positive("alpha prior rate", h.alpha.rate)?;
        ensure_positive("total mass prior shape", h.total_mass.shape)?;
        ensure_positive("total mass prior rate", h.total_mass.rate)?;
        ensure_positive("sigma2 prior shape", h.sigma2.shape)?;
        ensure_positive("sigma2 prior scale", h.sigma2.scale)?;
        ensure_positive("mixture concentration", h.mixture_concentration)?;
        if let Some(a) = self.initial_alpha {
            ensure_positive("initial alpha", a)?;
        }
        Ok(())
    }
}

/// Acceptance counts of one Metropolis block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl BlockStats {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    pub fn rejected(&self) -> u64 {
        self.proposed - self.accepted
    }

    /// Acceptance rate; NaN without proposals.
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn merge(&mut self, other: BlockStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// Counters of one sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepStats {
    /// Per unconstrained atom coordinate.
    pub locations: Vec<BlockStats>,
    pub jumps: BlockStats,
    pub total_mass: BlockStats,
    pub allocation_fallbacks: usize,
}

impl SweepStats {
    pub fn locations_total(&self) -> BlockStats {
        let mut t = BlockStats::default();
        for b in &self.locations {
            t.merge(*b);
        }
        t
    }
}

#[derive(Debug, Clone)]
struct AdaptState {
    window: usize,
    locations: Vec<BlockStats>,
    total_mass: BlockStats,
    sweeps: usize,
}

/// A running chain: state, generator, trace and adaptation bookkeeping.
pub struct Chain<'m, P: AtomPrior, M: ObservationModel<P::Atom>> {
    config: SamplerConfig,
    model: &'m M,
    state: ChainState<P>,
    rng: SimRng,
    iteration: usize,
    trace: ChainTrace<P::Atom>,
    adapt: AdaptState,
}

impl<'m, P: AtomPrior, M: ObservationModel<P::Atom>> Chain<'m, P, M> {
    /// Draws the initial state from the prior, retrying up to 100 times when
    /// the initial log-likelihood is not finite.
    pub fn new(config: SamplerConfig, prior: P, model: &'m M, mut rng: SimRng) -> Result<Self> {
        config.validate()?;
        let state = ChainState::from_prior(&config, prior, model, &mut rng)?;
        let n_coords = state.steps.locations.len();
        let mut trace = ChainTrace::new(state.prior.coord_names());
        trace.records.push(TraceRecord::initial(&state, model));
        let mut chain = Self {
            config,
            model,
            state,
            rng,
            iteration: 0,
            trace,
            adapt: AdaptState {
                window: 0,
                locations: vec![BlockStats::default(); n_coords],
                total_mass: BlockStats::default(),
                sweeps: 0,
            },
        };
        chain.maybe_snapshot();
        Ok(chain)
    }

    pub fn state(&self) -> &ChainState<P> {
        &self.state
    }

    #[cfg(test)]
    pub(crate) fn state_mut_for_tests(&mut self) -> &mut ChainState<P> {
        &mut self.state
    }

    pub fn trace(&self) -> &ChainTrace<P::Atom> {
        &self.trace
    }

    pub fn into_trace(self) -> ChainTrace<P::Atom> {
        self.trace
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// One full Gibbs sweep.
    pub fn sweep(&mut self) -> Result<SweepStats> {
        let model = self.model;
        let cfg = &self.config;
        let rng = &mut self.rng;
        let state = &mut self.state;
        let alloc = step_allocations(state, model, cfg.kappa0, rng)?;
        let locations = step_locations(state, model, rng)?;
        let jumps = step_jumps(state, model, rng)?;
        let total_mass = step_total_mass(state, model, &cfg.priors.total_mass, rng)?;
        if cfg.update_sigma2 && model.samples_noise() {
            step_sigma2(state, model, &cfg.priors.sigma2, rng)?;
        }
        if cfg.update_alpha {
            step_alpha(state, &cfg.priors.alpha, rng)?;
        }
        if cfg.update_mixture_weights && state.prior.mixture_components() > 0 {
            let ChainState { prior, atoms, .. } = state;
            step_scale_mixture_weights(prior, atoms, cfg.priors.mixture_concentration, rng)?;
        }
        Ok(SweepStats {
            locations,
            jumps,
            total_mass,
            allocation_fallbacks: alloc.fallbacks,
        })
    }

    /// Runs `iterations` more sweeps, recording the trace.
    pub fn run(&mut self, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            let stats = self.sweep()?;
            self.iteration += 1;
            self.trace.add_totals(&stats);
            if self.config.adapt && self.iteration <= self.config.burn_in {
                self.accumulate_adaptation(&stats);
            }
            if self.iteration % self.config.thinning == 0 {
                let rec = TraceRecord::from_sweep(self.iteration, &self.state, self.model, &stats);
                self.trace.records.push(rec);
            }
            self.maybe_snapshot();
        }
        self.trace.final_steps = self.state.steps.clone();
        Ok(())
    }

    fn accumulate_adaptation(&mut self, stats: &SweepStats) {
        for (a, s) in self.adapt.locations.iter_mut().zip(&stats.locations) {
            a.merge(*s);
        }
        self.adapt.total_mass.merge(stats.total_mass);
        self.adapt.sweeps += 1;
        if self.adapt.sweeps < self.config.adapt_window {
            return;
        }
        self.adapt.window += 1;
        let target = self.config.target_acceptance;
        let w = self.adapt.window;
        for (h, b) in self.state.steps.locations.iter_mut().zip(&self.adapt.locations) {
            if b.proposed > 0 {
                *h = adapt_step_sizes(*h, b.rate(), target, w);
            }
        }
        if self.adapt.total_mass.proposed > 0 {
            let h = &mut self.state.steps.total_mass;
            *h = adapt_step_sizes(*h, self.adapt.total_mass.rate(), target, w);
        }
        self.adapt.locations.iter_mut().for_each(|b| *b = BlockStats::default());
        self.adapt.total_mass = BlockStats::default();
        self.adapt.sweeps = 0;
    }

    fn maybe_snapshot(&mut self) {
        let every = self.config.snapshot_every;
        if every > 0 && self.iteration % every == 0 {
            self.trace.snapshots.push(Snapshot::of(self.iteration, &self.state));
        }
    }
}

/// Initializes from the prior and runs `config.n_iterations` sweeps.
pub fn run_chain<P: AtomPrior, M: ObservationModel<P::Atom>>(
    config: &SamplerConfig,
    prior: P,
    model: &M,
    rng: SimRng,
) -> Result<ChainTrace<P::Atom>> {
    let mut chain = Chain::new(config.clone(), prior, model, rng)?;
    chain.run(config.n_iterations)?;
    Ok(chain.into_trace())
}
