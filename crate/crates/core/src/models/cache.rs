use crate::error::{Error, Result};

/// Number of incremental updates between full recomputations of `fitted`.
pub const REFRESH_INTERVAL: usize = 1000;

/// Current fitted values `sum_k w_k r_k` over atom slots, where `r_k` is the
/// response vector of atom `k` at the observations and `w_k` its total weight.
///
/// Every mutation adjusts `fitted` in O(n); a full recomputation runs every
/// [`REFRESH_INTERVAL`] updates to bound floating-point drift.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedValuesCache {
    n: usize,
    responses: Vec<Vec<f64>>,
    norms2: Vec<f64>,
    weights: Vec<f64>,
    fitted: Vec<f64>,
    updates: usize,
}

impl FittedValuesCache {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            responses: Vec::new(),
            norms2: Vec::new(),
            weights: Vec::new(),
            fitted: vec![0.0; n],
            updates: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn response(&self, k: usize) -> &[f64] {
        &self.responses[k]
    }

    /// `|r_k|^2`.
    pub fn norm2(&self, k: usize) -> f64 {
        self.norms2[k]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: k,
                len: self.len(),
            })
        }
    }

    fn check_len(&self, response: &[f64]) -> Result<()> {
        if response.len() == self.n {
            Ok(())
        } else {
            Err(Error::param(format!(
                "response has length {}, cache has {}",
                response.len(),
                self.n
            )))
        }
    }

    fn tick(&mut self) {
        self.updates += 1;
        if self.updates >= REFRESH_INTERVAL {
            self.recompute();
        }
    }

    /// Rebuilds `fitted` from scratch.
    pub fn recompute(&mut self) {
        self.fitted.iter_mut().for_each(|f| *f = 0.0);
        for (r, w) in self.responses.iter().zip(&self.weights) {
            for (f, v) in self.fitted.iter_mut().zip(r) {
                *f += w * v;
            }
        }
        self.updates = 0;
    }

    pub fn push(&mut self, response: Vec<f64>, weight: f64) -> Result<usize> {
        self.check_len(&response)?;
        axpy(&mut self.fitted, weight, &response);
        self.norms2.push(dot(&response, &response));
        self.responses.push(response);
        self.weights.push(weight);
        self.tick();
        Ok(self.len() - 1)
    }

    /// Removes slot `k`; the last slot moves into position `k`.
    pub fn swap_remove(&mut self, k: usize) -> Result<()> {
        self.check_index(k)?;
        let w = self.weights.swap_remove(k);
        let r = self.responses.swap_remove(k);
        self.norms2.swap_remove(k);
        axpy(&mut self.fitted, -w, &r);
        self.tick();
        Ok(())
    }

    pub fn set_weight(&mut self, k: usize, weight: f64) -> Result<()> {
        self.check_index(k)?;
        let dw = weight - self.weights[k];
        if dw != 0.0 {
            axpy(&mut self.fitted, dw, &self.responses[k]);
            self.weights[k] = weight;
            self.tick();
        }
        Ok(())
    }

    /// Replaces slot `k` by a new response and weight: subtracts the old
    /// contribution, adds the new one.
    pub fn apply_atom_delta(&mut self, k: usize, response: Vec<f64>, weight: f64) -> Result<()> {
        self.check_index(k)?;
        self.check_len(&response)?;
        if response == self.responses[k] && weight == self.weights[k] {
            return Ok(());
        }
        let old_w = self.weights[k];
        for ((f, old), new) in self.fitted.iter_mut().zip(&self.responses[k]).zip(&response) {
            *f += weight * new - old_w * old;
        }
        self.norms2[k] = dot(&response, &response);
        self.responses[k] = response;
        self.weights[k] = weight;
        self.tick();
        Ok(())
    }

    /// Multiplies every weight (and hence `fitted`) by `c`.
    pub fn scale_all(&mut self, c: f64) {
        self.weights.iter_mut().for_each(|w| *w *= c);
        self.fitted.iter_mut().for_each(|f| *f *= c);
        self.tick();
    }

    /// Largest deviation of `fitted` from a full recomputation.
    pub fn max_drift(&self) -> f64 {
        let mut fresh = self.clone();
        fresh.recompute();
        fresh
            .fitted
            .iter()
            .zip(&self.fitted)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
