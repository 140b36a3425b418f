use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::gamma::ln_gamma;

use super::state::{dirichlet, ChainState};
use super::{BlockStats, InverseGammaPrior};
use crate::error::{Error, Result};
use crate::measures::{gamma_ln_pdf, gamma_unchecked, sample_sga, AtomPrior, GammaComponent, SGaParams};
use crate::models::{NoiseState, ObservationModel};
use crate::SimRng;

/// `<y - fitted, r>`.
#[inline]
fn residual_dot(y: &[f64], fitted: &[f64], r: &[f64]) -> f64 {
    y.iter()
        .zip(fitted)
        .zip(r)
        .map(|((y, f), r)| (y - f) * r)
        .sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn accept(log_ratio: f64, rng: &mut SimRng) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    // NaN compares false and is rejected
    rng.random::<f64>().ln() < log_ratio
}

/// Samples an index with probabilities proportional to `exp(logw)`; `None`
/// when no entry is finite.
fn sample_log_categorical(logw: &[f64], rng: &mut SimRng) -> Option<usize> {
    let max = logw
        .iter()
        .cloned()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let w: Vec<f64> = logw
        .iter()
        .map(|&l| if l.is_nan() { 0.0 } else { (l - max).exp() })
        .collect();
    let total: f64 = w.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, wi) in w.iter().enumerate() {
        if *wi > 0.0 {
            last = i;
            acc += wi;
            if u < acc {
                return Some(i);
            }
        }
    }
    Some(last)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AllocationStats {
    /// Particles whose candidate likelihoods all vanished, so that the
    /// allocation fell back to the prior urn weights.
    pub fallbacks: usize,
}

/// Removes cluster `k`, returning its atom and response. The last cluster
/// takes index `k`.
fn remove_cluster<P: AtomPrior>(state: &mut ChainState<P>, k: usize) -> Result<(P::Atom, Vec<f64>)> {
    let last = state.atoms.len() - 1;
    let response = state.cache.response(k).to_vec();
    state.cache.swap_remove(k)?;
    let atom = state.atoms.swap_remove(k);
    state.counts.swap_remove(k);
    state.jump_sums.swap_remove(k);
    if k != last {
        for c in state.assignments.iter_mut() {
            if *c == last {
                *c = k;
            }
        }
    }
    Ok((atom, response))
}

/// Reallocates every particle in turn among the occupied clusters and
/// `kappa0` fresh atoms drawn from the prior. A particle that was alone in its
/// cluster offers its own atom as the first fresh candidate.
pub fn step_allocations<P: AtomPrior, M: ObservationModel<P::Atom>>(
    state: &mut ChainState<P>,
    model: &M,
    kappa0: usize,
    rng: &mut SimRng,
) -> Result<AllocationStats> {
    if kappa0 == 0 {
        return Err(Error::param("kappa0 must be at least 1"));
    }
    let mut stats = AllocationStats::default();
    let mut scratch = AllocationScratch::default();
    for i in 0..state.p() {
        if allocate_particle(state, model, i, kappa0, &mut scratch, rng)? {
            stats.fallbacks += 1;
        }
    }
    Ok(stats)
}

pub(crate) struct AllocationScratch<A> {
    resid: Vec<f64>,
    logw: Vec<f64>,
    aux: Vec<(A, Vec<f64>, f64)>,
}

impl<A> Default for AllocationScratch<A> {
    fn default() -> Self {
        Self {
            resid: Vec::new(),
            logw: Vec::new(),
            aux: Vec::new(),
        }
    }
}

/// Reallocates particle `i`; returns whether the prior-weight fallback was
/// used.
pub(crate) fn allocate_particle<P: AtomPrior, M: ObservationModel<P::Atom>>(
    state: &mut ChainState<P>,
    model: &M,
    i: usize,
    kappa0: usize,
    scratch: &mut AllocationScratch<P::Atom>,
    rng: &mut SimRng,
) -> Result<bool> {
    let y = model.observations();
    let sigma2 = state.noise.sigma2();
    let ln_aux = (state.alpha / kappa0 as f64).ln();
    let AllocationScratch { resid, logw, aux } = scratch;
    resid.resize(y.len(), 0.0);
    let mut fallback = false;
    let c = state.weight_factor();
    let k = state.assignments[i];
    let j = state.jumps[i];
    state.counts[k] -= 1;
    state.jump_sums[k] -= j;
    aux.clear();
    if state.counts[k] == 0 {
        let (atom, response) = remove_cluster(state, k)?;
        let q = dot(&response, &response);
        aux.push((atom, response, q));
    } else {
        state.cache.set_weight(k, c * state.jump_sums[k])?;
    }
    while aux.len() < kappa0 {
        let atom = state.prior.sample(rng);
        let response = ChainState::<P>::response(model, &atom);
        let q = dot(&response, &response);
        aux.push((atom, response, q));
    }
    for ((r, yi), f) in resid.iter_mut().zip(y).zip(state.cache.fitted()) {
        *r = yi - f;
    }
    // log N(r - cJ phi) up to terms independent of the candidate
    let cj = c * j;
    let ll = |b: f64, q: f64| (2.0 * cj * b - cj * cj * q) / (2.0 * sigma2);
    logw.clear();
    for l in 0..state.atoms.len() {
        let b = dot(resid, state.cache.response(l));
        logw.push((state.counts[l] as f64).ln() + ll(b, state.cache.norm2(l)));
    }
    for (atom, response, q) in aux.iter() {
        let lw = if model.atom_is_valid(atom) {
            ln_aux + ll(dot(resid, response), *q)
        } else {
            f64::NEG_INFINITY
        };
        logw.push(lw);
    }
    let choice = match sample_log_categorical(logw, rng) {
        Some(ch) => ch,
        None => {
            fallback = true;
            let prior_w: Vec<f64> = (0..logw.len())
                .map(|l| match l.checked_sub(state.atoms.len()) {
                    None => (state.counts[l] as f64).ln(),
                    Some(a) if model.atom_is_valid(&aux[a].0) => ln_aux,
                    Some(_) => f64::NEG_INFINITY,
                })
                .collect();
            sample_log_categorical(&prior_w, rng).ok_or_else(|| {
                Error::Numeric("no valid allocation candidate for a particle".into())
            })?
        }
    };
    let n_occupied = state.atoms.len();
    if choice < n_occupied {
        state.counts[choice] += 1;
        state.jump_sums[choice] += j;
        state.cache.set_weight(choice, c * state.jump_sums[choice])?;
        state.assignments[i] = choice;
    } else {
        let (atom, response, _) = aux.swap_remove(choice - n_occupied);
        state.cache.push(response, cj)?;
        state.atoms.push(atom);
        state.counts.push(1);
        state.jump_sums.push(j);
        state.assignments[i] = n_occupied;
    }
    Ok(fallback)
}

/// Random-walk Metropolis on each unconstrained coordinate of each unique
/// atom, targeting likelihood times prior density.
pub fn step_locations<P: AtomPrior, M: ObservationModel<P::Atom>>(
    state: &mut ChainState<P>,
    model: &M,
    rng: &mut SimRng,
) -> Result<Vec<BlockStats>> {
    let n_coords = state.prior.n_coords();
    let mut stats = vec![BlockStats::default(); n_coords];
    let y = model.observations();
    let sigma2 = state.noise.sigma2();
    let mut proposal = vec![0.0; y.len()];
    for k in 0..state.atoms.len() {
        let w = state.cluster_weight(k);
        let mut lp_old = state.prior.ln_density(&state.atoms[k]);
        for (coord, st) in stats.iter_mut().enumerate() {
            let h = state.steps.locations[coord];
            let (new, ln_jac) = state.prior.propose(&state.atoms[k], coord, h, rng);
            if !model.atom_is_valid(&new) {
                st.record(false);
                continue;
            }
            let lp_new = state.prior.ln_density(&new);
            if lp_new == f64::NEG_INFINITY {
                st.record(false);
                continue;
            }
            model.response(&new, &mut proposal);
            // |r - w d|^2 - |r|^2 with d = phi_new - phi_old
            let old = state.cache.response(k);
            let fitted = state.cache.fitted();
            let mut rd = 0.0;
            let mut dd = 0.0;
            for (((yi, fi), pn), po) in y.iter().zip(fitted).zip(&proposal).zip(old) {
                let d = pn - po;
                rd += (yi - fi) * d;
                dd += d * d;
            }
            let dss = -2.0 * w * rd + w * w * dd;
            let log_ratio = -dss / (2.0 * sigma2) + lp_new - lp_old + ln_jac;
            let ok = accept(log_ratio, rng);
            st.record(ok);
            if ok {
                state.cache.apply_atom_delta(k, proposal.clone(), w)?;
                state.atoms[k] = new;
                lp_old = lp_new;
            }
        }
    }
    Ok(stats)
}

/// Independent Metropolis on each jump with the `SGa(1, 1)` prior as
/// proposal; the acceptance ratio is the likelihood ratio.
pub fn step_jumps<P: AtomPrior, M: ObservationModel<P::Atom>>(
    state: &mut ChainState<P>,
    model: &M,
    rng: &mut SimRng,
) -> Result<BlockStats> {
    let mut stats = BlockStats::default();
    let y = model.observations();
    let sigma2 = state.noise.sigma2();
    let c = state.weight_factor();
    let unit = SGaParams::unit();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); state.atoms.len()];
    for (i, &k) in state.assignments.iter().enumerate() {
        members[k].push(i);
    }
    for (k, idx) in members.iter().enumerate() {
        let mut b = residual_dot(y, state.cache.fitted(), state.cache.response(k));
        let q = state.cache.norm2(k);
        let mut changed = false;
        for &i in idx {
            let new = sample_sga(&unit, rng);
            let d = c * (new - state.jumps[i]);
            let dss = -2.0 * d * b + d * d * q;
            let ok = accept(-dss / (2.0 * sigma2), rng);
            stats.record(ok);
            if ok {
                state.jump_sums[k] += new - state.jumps[i];
                state.jumps[i] = new;
                b -= d * q;
                changed = true;
            }
        }
        if changed {
            // recompute the sum to avoid accumulating cancellation error
            state.jump_sums[k] = idx.iter().map(|&i| state.jumps[i]).sum();
            state.cache.set_weight(k, c * state.jump_sums[k])?;
        }
    }
    Ok(stats)
}

/// Random-walk Metropolis on `log T` under a `Ga(shape, rate)` prior.
pub fn step_total_mass<P: AtomPrior, M: ObservationModel<P::Atom>>(
    state: &mut ChainState<P>,
    model: &M,
    prior: &GammaComponent,
    rng: &mut SimRng,
) -> Result<BlockStats> {
    let mut stats = BlockStats::default();
    let y = model.observations();
    let f = state.cache.fitted();
    let yf = dot(y, f);
    let ff = dot(f, f);
    let t = state.total_mass;
    let z: f64 = crate::measures::std_normal(rng);
    let t_new = t * (state.steps.total_mass * z).exp();
    let log_ratio = total_mass_log_ratio(t, t_new, yf, ff, state.noise, prior);
    let ok = t_new > 0.0 && t_new.is_finite() && accept(log_ratio, rng);
    stats.record(ok);
    if ok {
        state.cache.scale_all((t_new / t).sqrt());
        state.total_mass = t_new;
    }
    Ok(stats)
}

/// Log acceptance ratio of moving `T` to `t_new` on the log scale, given
/// `<y, F>` and `|F|^2` of the current fitted values `F`.
pub(crate) fn total_mass_log_ratio(
    t: f64,
    t_new: f64,
    yf: f64,
    ff: f64,
    noise: NoiseState,
    prior: &GammaComponent,
) -> f64 {
    let rho = (t_new / t).sqrt();
    // |y - rho F|^2 - |y - F|^2
    let dss = -2.0 * (rho - 1.0) * yf + (rho * rho - 1.0) * ff;
    -dss / (2.0 * noise.sigma2()) + gamma_ln_pdf(t_new, prior.shape, prior.rate)
        - gamma_ln_pdf(t, prior.shape, prior.rate)
        + (t_new / t).ln()
}

/// Exact draw of the noise variance from its Inverse-Gamma full conditional.
pub fn step_sigma2<P: AtomPrior, M: ObservationModel<P::Atom>>(
    state: &mut ChainState<P>,
    model: &M,
    prior: &InverseGammaPrior,
    rng: &mut SimRng,
) -> Result<()> {
    if !model.samples_noise() {
        return Err(Error::Unsupported(
            "noise variance is fixed for this observation model".into(),
        ));
    }
    let n = model.n_obs() as f64;
    let shape = prior.shape + 0.5 * n;
    let scale = prior.scale + 0.5 * state.ssr(model);
    state.noise = NoiseState::new(1.0 / gamma_unchecked(shape, scale, rng))?;
    Ok(())
}

/// Auxiliary-variable Gibbs update of the urn concentration under a
/// `Ga(shape, rate)` prior, given the number of clusters among `p` draws.
pub fn step_alpha<P: AtomPrior>(
    state: &mut ChainState<P>,
    prior: &GammaComponent,
    rng: &mut SimRng,
) -> Result<()> {
    let k = state.n_clusters();
    let p = state.p();
    state.alpha = draw_alpha(state.alpha, k, p, prior, rng)?;
    Ok(())
}

pub(crate) fn draw_alpha(
    alpha: f64,
    k: usize,
    p: usize,
    prior: &GammaComponent,
    rng: &mut SimRng,
) -> Result<f64> {
    let eta = Beta::new(alpha + 1.0, p as f64)
        .map_err(|e| Error::Numeric(format!("beta auxiliary: {e}")))?
        .sample(rng)
        .max(f64::MIN_POSITIVE);
    let (w_hi, rate) = alpha_mixture_weight(k, p, eta, prior);
    let k = k as f64;
    let shape = if rng.random::<f64>() < w_hi {
        prior.shape + k
    } else {
        prior.shape + k - 1.0
    };
    Ok(gamma_unchecked(shape, rate, rng).max(f64::MIN_POSITIVE))
}

/// Weight of the `Ga(a + k, b - ln eta)` component and the common rate.
fn alpha_mixture_weight(k: usize, p: usize, eta: f64, prior: &GammaComponent) -> (f64, f64) {
    let rate = prior.rate - eta.ln();
    let odds = (prior.shape + k as f64 - 1.0) / (p as f64 * rate);
    (odds / (1.0 + odds), rate)
}

/// Log density of the two-component Gamma mixture that `alpha` is drawn from
/// given the auxiliary variable `eta`.
pub fn alpha_mixture_ln_density(
    alpha: f64,
    k: usize,
    p: usize,
    eta: f64,
    prior: &GammaComponent,
) -> f64 {
    let (w, rate) = alpha_mixture_weight(k, p, eta, prior);
    let kf = k as f64;
    let hi = w.ln() + gamma_ln_pdf(alpha, prior.shape + kf, rate);
    let lo = if prior.shape + kf - 1.0 > 0.0 && w < 1.0 {
        (1.0 - w).ln() + gamma_ln_pdf(alpha, prior.shape + kf - 1.0, rate)
    } else {
        f64::NEG_INFINITY
    };
    let m = hi.max(lo);
    m + ((hi - m).exp() + (lo - m).exp()).ln()
}

/// Unnormalized log density of `alpha` given `k` clusters among `p` draws:
/// `ln prior(alpha) + k ln alpha + ln Gamma(alpha) - ln Gamma(alpha + p)`.
pub fn alpha_conditional_ln_density(alpha: f64, k: usize, p: usize, prior: &GammaComponent) -> f64 {
    gamma_ln_pdf(alpha, prior.shape, prior.rate) + k as f64 * alpha.ln() + ln_gamma(alpha)
        - ln_gamma(alpha + p as f64)
}

/// `ln w_c + ln Ga_c(scale)` for every component `c`.
pub(crate) fn indicator_ln_weights<P: AtomPrior>(prior: &P, atom: &P::Atom) -> Vec<f64> {
    (0..prior.mixture_components())
        .map(|c| prior.mixture_weights()[c].ln() + prior.component_ln_density(atom, c))
        .collect()
}

/// Normalized conditional probabilities of an atom's mixture indicator.
pub fn indicator_probabilities<P: AtomPrior>(prior: &P, atom: &P::Atom) -> Vec<f64> {
    let lw = indicator_ln_weights(prior, atom);
    let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Resamples each atom's mixture indicator from `P(c) ∝ w_c Ga_c(scale)` and
/// the weights from `Dirichlet(concentration + counts)`.
pub fn step_scale_mixture_weights<P: AtomPrior>(
    prior: &mut P,
    atoms: &mut [P::Atom],
    concentration: f64,
    rng: &mut SimRng,
) -> Result<()> {
    let m = prior.mixture_components();
    if m == 0 {
        return Ok(());
    }
    let mut counts = vec![0usize; m];
    for atom in atoms.iter_mut() {
        let logw = indicator_ln_weights(prior, atom);
        let c = sample_log_categorical(&logw, rng)
            .ok_or_else(|| Error::Numeric("mixture indicator has no positive weight".into()))?;
        prior.set_component(atom, c);
        counts[c] += 1;
    }
    let conc: Vec<f64> = counts.iter().map(|&n| concentration + n as f64).collect();
    let w = dirichlet(&conc, rng);
    prior.set_mixture_weights(&w);
    Ok(())
}

/// One Robbins-Monro update of a random-walk step size on the log scale:
/// `ln h += (acceptance - target) / sqrt(window)`.
pub fn adapt_step_sizes(step: f64, acceptance: f64, target: f64, window: usize) -> f64 {
    if !acceptance.is_finite() {
        return step;
    }
    let gain = 1.0 / (window.max(1) as f64).sqrt();
    (step * ((acceptance - target) * gain).exp()).clamp(1e-8, 1e3)
}
