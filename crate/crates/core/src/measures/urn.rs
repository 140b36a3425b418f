use rand::Rng;

use super::base::{AtomPrior, BaseMeasure};
use crate::error::{Error, Result};
use crate::SimRng;

/// Clustering of a Pólya urn sequence: the distinct values drawn so far, the
/// number of draws sharing each value and the value index of every draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyaUrnState<A> {
    pub unique_values: Vec<A>,
    pub counts: Vec<usize>,
    pub assignments: Vec<usize>,
    pub alpha: f64,
}

impl<A: Clone> PolyaUrnState<A> {
    pub fn n_draws(&self) -> usize {
        self.assignments.len()
    }

    pub fn n_unique(&self) -> usize {
        self.unique_values.len()
    }

    /// Materialises the sequence `X_1, ..., X_p`.
    pub fn values(&self) -> Vec<A> {
        self.assignments
            .iter()
            .map(|&k| self.unique_values[k].clone())
            .collect()
    }

    /// Checks the bookkeeping invariants.
    pub fn check(&self) -> Result<()> {
        if self.counts.len() != self.unique_values.len() {
            return Err(Error::Numeric("urn counts and values disagree".into()));
        }
        if self.counts.iter().any(|&c| c == 0) {
            return Err(Error::Numeric("urn holds an empty cluster".into()));
        }
        if self.counts.iter().sum::<usize>() != self.assignments.len() {
            return Err(Error::Numeric("urn counts do not sum to the draw count".into()));
        }
        let mut tally = vec![0usize; self.counts.len()];
        for &k in &self.assignments {
            *tally.get_mut(k).ok_or(Error::IndexOutOfRange {
                index: k,
                len: self.counts.len(),
            })? += 1;
        }
        if tally != self.counts {
            return Err(Error::Numeric("urn counts do not match assignments".into()));
        }
        Ok(())
    }
}

/// Draws `p` values from the Pólya urn with base distribution `alpha * F`.
///
/// The first draw comes from `F`; afterwards draw `k + 1` copies one of the
/// `k` previous draws uniformly (i.e. a value with probability proportional
/// to its count) with probability `k / (alpha + k)`, otherwise it is fresh
/// from `F`.
pub fn sample_polya_urn<P: AtomPrior>(
    base: &BaseMeasure<P>,
    p: usize,
    rng: &mut SimRng,
) -> Result<(Vec<P::Atom>, PolyaUrnState<P::Atom>)> {
    if p == 0 {
        return Err(Error::param("number of urn draws must be at least 1"));
    }
    let alpha = base.alpha();
    let mut state = PolyaUrnState {
        unique_values: Vec::new(),
        counts: Vec::new(),
        assignments: Vec::with_capacity(p),
        alpha,
    };
    for k in 0..p {
        let fresh = k == 0 || rng.random::<f64>() * (alpha + k as f64) < alpha;
        let cluster = if fresh {
            state.unique_values.push(base.prior.sample(rng));
            state.counts.push(0);
            state.unique_values.len() - 1
        } else {
            state.assignments[rng.random_range(0..k)]
        };
        state.counts[cluster] += 1;
        state.assignments.push(cluster);
    }
    Ok((state.values(), state))
}
