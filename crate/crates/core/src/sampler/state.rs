use rand_distr::{Distribution, Gamma};

use super::SamplerConfig;
use crate::error::{Error, Result};
use crate::measures::{
    gamma_unchecked, sample_polya_urn, sample_sga, AtomPrior, BaseMeasure, ParticleMeasure,
    SGaParams,
};
use crate::models::{gaussian_loglik_from_ssr, FittedValuesCache, NoiseState, ObservationModel};
use crate::SimRng;

const MAX_INIT_ATTEMPTS: usize = 100;

/// Random-walk step sizes per block.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepSizes {
    /// One per unconstrained atom coordinate.
    pub locations: Vec<f64>,
    /// On `log T`.
    pub total_mass: f64,
}

/// Current value of every sampled quantity.
///
/// Clusters are indexed `0..atoms.len()`; slot `k` of the fitted-values cache
/// holds the response of `atoms[k]` with weight `sqrt(T/p) * jump_sums[k]`.
#[derive(Debug, Clone)]
pub struct ChainState<P: AtomPrior> {
    pub assignments: Vec<usize>,
    pub atoms: Vec<P::Atom>,
    pub counts: Vec<usize>,
    /// Sum of the jumps of each cluster.
    pub jump_sums: Vec<f64>,
    pub jumps: Vec<f64>,
    pub total_mass: f64,
    pub noise: NoiseState,
    pub alpha: f64,
    /// Atom prior, carrying the current mixture weights if it has any.
    pub prior: P,
    pub cache: FittedValuesCache,
    pub steps: StepSizes,
}

impl<P: AtomPrior> ChainState<P> {
    pub fn p(&self) -> usize {
        self.jumps.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.atoms.len()
    }

    /// `sqrt(T / p)`.
    pub fn weight_factor(&self) -> f64 {
        (self.total_mass / self.p() as f64).sqrt()
    }

    pub fn cluster_weight(&self, k: usize) -> f64 {
        self.weight_factor() * self.jump_sums[k]
    }

    pub fn scale_mix_weights(&self) -> &[f64] {
        self.prior.mixture_weights()
    }

    /// Residual sum of squares against the model's observations.
    pub fn ssr<M: ObservationModel<P::Atom>>(&self, model: &M) -> f64 {
        model
            .observations()
            .iter()
            .zip(self.cache.fitted())
            .map(|(y, f)| (y - f) * (y - f))
            .sum()
    }

    pub fn log_likelihood<M: ObservationModel<P::Atom>>(&self, model: &M) -> f64 {
        gaussian_loglik_from_ssr(model.n_obs(), self.ssr(model), self.noise.sigma2())
    }

    /// Expanded particle measure `sqrt(T/p) sum_i J_i delta_{X_{C_i}}`.
    pub fn to_particle_measure(&self) -> Result<ParticleMeasure<P::Atom>> {
        let atoms = self
            .assignments
            .iter()
            .map(|&k| self.atoms[k].clone())
            .collect();
        ParticleMeasure::new(self.total_mass, self.jumps.clone(), atoms)
    }

    pub(crate) fn response<M: ObservationModel<P::Atom>>(model: &M, atom: &P::Atom) -> Vec<f64> {
        let mut r = vec![0.0; model.n_obs()];
        model.response(atom, &mut r);
        r
    }

    /// Builds a state from explicit values; `assignments[i]` indexes `atoms`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts<M: ObservationModel<P::Atom>>(
        prior: P,
        model: &M,
        atoms: Vec<P::Atom>,
        assignments: Vec<usize>,
        jumps: Vec<f64>,
        total_mass: f64,
        sigma2: f64,
        alpha: f64,
    ) -> Result<Self> {
        if assignments.len() != jumps.len() || jumps.is_empty() {
            return Err(Error::param("need p >= 1 assignments and jumps of equal length"));
        }
        crate::error::ensure_positive("total mass", total_mass)?;
        crate::error::ensure_positive("alpha", alpha)?;
        let k = atoms.len();
        let mut counts = vec![0usize; k];
        let mut jump_sums = vec![0.0; k];
        for (i, &c) in assignments.iter().enumerate() {
            if c >= k {
                return Err(Error::IndexOutOfRange { index: c, len: k });
            }
            counts[c] += 1;
            jump_sums[c] += jumps[i];
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::param("every atom needs at least one particle"));
        }
        let w = (total_mass / jumps.len() as f64).sqrt();
        let mut cache = FittedValuesCache::new(model.n_obs());
        for (atom, s) in atoms.iter().zip(&jump_sums) {
            cache.push(Self::response(model, atom), w * s)?;
        }
        let steps = StepSizes {
            locations: prior.default_steps(),
            total_mass: 0.5,
        };
        Ok(Self {
            assignments,
            atoms,
            counts,
            jump_sums,
            jumps,
            total_mass,
            noise: NoiseState::new(sigma2)?,
            alpha,
            prior,
            cache,
            steps,
        })
    }

    /// Draws `(alpha, T, J, X, sigma2)` and the mixture weights from their
    /// priors.
    pub fn from_prior<M: ObservationModel<P::Atom>>(
        config: &SamplerConfig,
        mut prior: P,
        model: &M,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let h = &config.priors;
        for _ in 0..MAX_INIT_ATTEMPTS {
            let alpha = match config.initial_alpha {
                Some(a) => a,
                None => gamma_unchecked(h.alpha.shape, h.alpha.rate, rng),
            };
            let k = prior.mixture_components();
            if k > 0 {
                let w = dirichlet(&vec![h.mixture_concentration; k], rng);
                prior.set_mixture_weights(&w);
            }
            let total_mass = gamma_unchecked(h.total_mass.shape, h.total_mass.rate, rng);
            let unit = SGaParams::unit();
            let jumps: Vec<f64> = (0..config.p).map(|_| sample_sga(&unit, rng)).collect();
            let base = BaseMeasure::new(alpha.max(f64::MIN_POSITIVE), prior.clone())?;
            let (_, urn) = sample_polya_urn(&base, config.p, rng)?;
            let sigma2 = match model.fixed_sigma2() {
                Some(s) => s,
                None => 1.0 / gamma_unchecked(h.sigma2.shape, h.sigma2.scale, rng),
            };
            let noise = match NoiseState::new(sigma2) {
                Ok(n) => n,
                Err(_) => continue,
            };
            if !urn.unique_values.iter().all(|a| model.atom_is_valid(a)) {
                continue;
            }
            let mut jump_sums = vec![0.0; urn.n_unique()];
            for (i, &c) in urn.assignments.iter().enumerate() {
                jump_sums[c] += jumps[i];
            }
            let c = (total_mass / config.p as f64).sqrt();
            let mut cache = FittedValuesCache::new(model.n_obs());
            for (atom, s) in urn.unique_values.iter().zip(&jump_sums) {
                cache.push(Self::response(model, atom), c * s)?;
            }
            let steps = StepSizes {
                locations: prior.default_steps(),
                total_mass: 0.5,
            };
            let state = Self {
                assignments: urn.assignments,
                atoms: urn.unique_values,
                counts: urn.counts,
                jump_sums,
                jumps,
                total_mass,
                noise,
                alpha,
                prior: prior.clone(),
                cache,
                steps,
            };
            if state.log_likelihood(model).is_finite() {
                return Ok(state);
            }
        }
        Err(Error::Numeric(format!(
            "no initial state with finite log-likelihood after {MAX_INIT_ATTEMPTS} prior draws"
        )))
    }

    /// Checks the bookkeeping invariants; `tol` bounds the drift of the
    /// fitted-values cache from a full recomputation.
    pub fn check<M: ObservationModel<P::Atom>>(&self, model: &M, tol: f64) -> Result<()> {
        let bad = |m: &str| Err(Error::Numeric(m.to_string()));
        let k = self.atoms.len();
        if self.counts.len() != k || self.jump_sums.len() != k || self.cache.len() != k {
            return bad("cluster arrays disagree in length");
        }
        if self.assignments.len() != self.jumps.len() {
            return bad("assignments and jumps disagree in length");
        }
        let mut tally = vec![0usize; k];
        let mut sums = vec![0.0; k];
        for (i, &c) in self.assignments.iter().enumerate() {
            if c >= k {
                return Err(Error::IndexOutOfRange { index: c, len: k });
            }
            tally[c] += 1;
            sums[c] += self.jumps[i];
        }
        if tally != self.counts || tally.iter().any(|&t| t == 0) {
            return bad("cluster counts do not match assignments or a cluster is empty");
        }
        let scale = 1.0 + self.jumps.iter().map(|j| j.abs()).sum::<f64>();
        if sums.iter().zip(&self.jump_sums).any(|(a, b)| (a - b).abs() > 1e-9 * scale) {
            return bad("cluster jump sums drifted");
        }
        let w = self.prior.mixture_weights();
        if !w.is_empty() && (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("mixture weights do not sum to one");
        }
        for (kk, atom) in self.atoms.iter().enumerate() {
            let expected = Self::response(model, atom);
            if expected != self.cache.response(kk) {
                return bad("cached response differs from the atom's response");
            }
            let wk = self.cluster_weight(kk);
            if (wk - self.cache.weight(kk)).abs() > 1e-9 * (1.0 + wk.abs()) {
                return bad("cached cluster weight differs from sqrt(T/p) * jump sum");
            }
        }
        if self.cache.max_drift() > tol {
            return bad("fitted-values cache drifted from full recomputation");
        }
        Ok(())
    }
}

pub(crate) fn dirichlet(concentration: &[f64], rng: &mut SimRng) -> Vec<f64> {
    let g: Vec<f64> = concentration
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map(|d| d.sample(rng)).unwrap_or(0.0))
        .collect();
    let s: f64 = g.iter().sum();
    if s > 0.0 {
        g.iter().map(|v| v / s).collect()
    } else {
        // all draws underflowed: fall back to the largest concentration
        let k = concentration.len();
        let imax = (0..k)
            .max_by(|&a, &b| concentration[a].total_cmp(&concentration[b]))
            .unwrap_or(0);
        (0..k).map(|i| (i == imax) as u8 as f64).collect()
    }
}
