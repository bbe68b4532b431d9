use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Size guard for the full 2^p table.
pub const MAX_BERNOULLI_DIM: usize = 20;

/// Joint law over {0,1}^p stored as a full table. Configuration x has index
/// Σ_k x_k 2^k, so the first variable is the fastest-varying bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvBernoulliParams {
    p: usize,
    table: Vec<f64>,
}

impl MvBernoulliParams {
    pub fn new(table: Vec<f64>) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return invalid(format!("table length {len} is not 2^p with p >= 1"));
        }
        let p = len.trailing_zeros() as usize;
        if p > MAX_BERNOULLI_DIM {
            return Err(Error::Dimension(format!("p = {p} exceeds the limit of {MAX_BERNOULLI_DIM}")));
        }
        if table.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("table entries must be finite and nonnegative");
        }
        let s: f64 = table.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return invalid(format!("table sums to {s}, not 1"));
        }
        Ok(Self { p, table })
    }

    /// Table of independent coordinates with P(X_k = 1) = probs[k].
    pub fn independent(probs: &[f64]) -> Result<Self> {
        let p = probs.len();
        if p == 0 || p > MAX_BERNOULLI_DIM {
            return Err(Error::Dimension(format!("p = {p} outside 1..={MAX_BERNOULLI_DIM}")));
        }
        if probs.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return invalid("marginal probabilities must lie in [0, 1]");
        }
        let table: Vec<f64> = (0..1usize << p)
            .map(|idx| (0..p).map(|k| if idx >> k & 1 == 1 { probs[k] } else { 1.0 - probs[k] }).product())
            .collect();
        // product rounding can leave the sum a few ulps off
        let s: f64 = table.iter().sum();
        Self::new(table.into_iter().map(|v| v / s).collect())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn index_of(&self, x: &[u8]) -> Result<usize> {
        if x.len() != self.p {
            return Err(Error::Dimension(format!("vector has {} entries, model has {}", x.len(), self.p)));
        }
        x.iter().enumerate().try_fold(0usize, |acc, (k, &b)| match b {
            0 => Ok(acc),
            1 => Ok(acc | 1 << k),
            _ => invalid(format!("entry {b} is not binary")),
        })
    }
}

pub fn mvbernoulli_logpmf(x: &[u8], params: &MvBernoulliParams) -> Result<f64> {
    Ok(params.table[params.index_of(x)?].ln())
}

/// P(X_k = 1), summing the table over configurations with bit k set.
pub fn mvbernoulli_marginal(params: &MvBernoulliParams, k: usize) -> Result<f64> {
    if k >= params.p {
        return Err(Error::Dimension(format!("index {k} out of range for p = {}", params.p)));
    }
    Ok(params.table.iter().enumerate().filter(|(i, _)| i >> k & 1 == 1).map(|(_, v)| v).sum())
}
