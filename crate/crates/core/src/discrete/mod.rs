//! Discrete multivariate models: multinomial tests and CDF, Dirichlet-multinomial
//! estimation, multivariate Bernoulli tables and multivariate Poisson samplers.

mod bernoulli;
mod dirmult;
mod multinomial;
mod poisson;

pub use bernoulli::{mvbernoulli_logpmf, mvbernoulli_marginal, MvBernoulliParams, MAX_BERNOULLI_DIM};
pub use dirmult::{
    dirmult_fit, dirmult_gradient, dirmult_hessian_parts, dirmult_loglik, dirmult_logpmf, dirmult_moments,
    dirmult_sample, rank_one_inverse, rank_one_solve, DirMultFit, DirMultFitConfig, DirMultInit, DirMultMoments,
    DirMultParams,
};
pub use multinomial::{
    levin_cdf, multinomial_logpmf, multinomial_mle, multinomial_sample, multinomial_two_sample, MultinomialMethod,
    MultinomialParams, MultinomialTestConfig,
};
pub use poisson::{
    bivpois_logpmf, bivpois_sample_norta, mvpois_sample_compound, mvpois_sample_latent, poisson_inverse_cdf,
    BivariatePoissonParams, CorrelationSign,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Nonnegative integer counts over p categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector {
    counts: Vec<u64>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    /// Parses real values that must be nonnegative integers.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        let counts = values
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
                    Ok(v as u64)
                } else {
                    Err(Error::InvalidInput(format!("count {v} is not a nonnegative integer")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn p(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl From<Vec<u64>> for CountVector {
    fn from(v: Vec<u64>) -> Self {
        Self::new(v)
    }
}

/// Rows of a count matrix (for example a parsed integer CSV).
pub fn count_rows(m: &crate::DataMatrix) -> Result<Vec<CountVector>> {
    (0..m.n())
        .map(|i| {
            let row: Vec<f64> = m.values().row(i).iter().copied().collect();
            CountVector::from_f64(&row)
        })
        .collect()
}
