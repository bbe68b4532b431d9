use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::linalg::sym_eigen;
use crate::rng::{RngStream, StreamRng};
use crate::special::{log_sum_exp, poisson_ln_pmf};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoissonParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl BivariatePoissonParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        for v in [lambda1, lambda2, lambda3] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("rate {v} must be finite and nonnegative"));
            }
        }
        Ok(Self { lambda1, lambda2, lambda3 })
    }

    pub fn correlation(&self) -> f64 {
        self.lambda3 / ((self.lambda1 + self.lambda3) * (self.lambda2 + self.lambda3)).sqrt()
    }
}

/// Joint mass of (Z1 + Z3, Z2 + Z3), summed over the shared component in log space.
pub fn bivpois_logpmf(x1: u64, x2: u64, params: &BivariatePoissonParams) -> f64 {
    let terms: Vec<f64> = (0..=x1.min(x2))
        .map(|z| {
            poisson_ln_pmf(x1 - z, params.lambda1)
                + poisson_ln_pmf(x2 - z, params.lambda2)
                + poisson_ln_pmf(z, params.lambda3)
        })
        .collect();
    log_sum_exp(&terms)
}

fn poisson_draw(lambda: f64, rng: &mut StreamRng) -> f64 {
    if lambda > 0.0 {
        Poisson::new(lambda).expect("positive rate").sample(rng)
    } else {
        0.0
    }
}

/// Pairwise-interaction latent model: X_k = Z_kk + Σ_{j≠k} Z_kj with Z_kj = Z_jk.
pub fn mvpois_sample_latent(rates: &DMatrix<f64>, n: usize, stream: &RngStream) -> Result<DataMatrix> {
    let p = rates.nrows();
    if !rates.is_square() || p == 0 {
        return Err(Error::Dimension(format!("rate matrix is {}x{}", rates.nrows(), rates.ncols())));
    }
    if rates.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("rates must be finite and nonnegative");
    }
    if (rates - rates.transpose()).abs().max() > 1e-12 * rates.abs().max().max(1.0) {
        return invalid("rate matrix must be symmetric");
    }
    if n == 0 {
        return Err(Error::TooSmall("sample size must be positive".into()));
    }
    let mut out = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut r = stream.derive(i as u64).rng();
        for j in 0..p {
            for k in j..p {
                let z = poisson_draw(rates[(j, k)], &mut r);
                out[(i, j)] += z;
                if k != j {
                    out[(i, k)] += z;
                }
            }
        }
    }
    DataMatrix::new(out)
}

/// Smallest y with F_λ(y) ≥ u.
pub fn poisson_inverse_cdf(lambda: f64, u: f64) -> u64 {
    if lambda <= 0.0 || u <= 0.0 {
        return 0;
    }
    // sequential search; pmf recursion in linear scale is exact enough here
    // and the tail cap stops the loop if rounding keeps the sum below u
    let cap = (lambda + 60.0 * lambda.sqrt() + 100.0).ceil() as u64;
    let mut log_pmf = -lambda;
    let mut cdf = log_pmf.exp();
    let mut k = 0u64;
    while cdf < u && k < cap {
        k += 1;
        log_pmf += lambda.ln() - (k as f64).ln();
        cdf += log_pmf.exp();
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationSign {
    Positive,
    Negative,
}

impl FromStr for CorrelationSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "+" => Ok(Self::Positive),
            "negative" | "-" => Ok(Self::Negative),
            other => invalid(format!("unknown correlation sign '{other}'")),
        }
    }
}

/// Inverse-CDF construction with a shared uniform. Columns keep their input
/// order; internally the smaller rate plays the role of the first margin.
pub fn bivpois_sample_norta(
    lambda1: f64,
    lambda2: f64,
    sign: CorrelationSign,
    lambda_star: f64,
    n: usize,
    stream: &RngStream,
) -> Result<DataMatrix> {
    if !(lambda1 > 0.0 && lambda2 > 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
        return invalid("marginal rates must be positive and finite");
    }
    let (small, large, swapped) = if lambda1 <= lambda2 { (lambda1, lambda2, false) } else { (lambda2, lambda1, true) };
    if !(0.0..=small).contains(&lambda_star) {
        return invalid(format!("lambda* = {lambda_star} outside [0, {small}]"));
    }
    if n == 0 {
        return Err(Error::TooSmall("sample size must be positive".into()));
    }
    let shared2 = large * lambda_star / small;
    let mut out = DMatrix::zeros(n, 2);
    for i in 0..n {
        let mut r = stream.derive(i as u64).rng();
        let (u1, u2, u3): (f64, f64, f64) = (r.gen(), r.gen(), r.gen());
        let u3b = match sign {
            CorrelationSign::Positive => u3,
            CorrelationSign::Negative => 1.0 - u3,
        };
        let a = poisson_inverse_cdf(small - lambda_star, u1) + poisson_inverse_cdf(lambda_star, u3);
        let b = poisson_inverse_cdf(large - shared2, u2) + poisson_inverse_cdf(shared2, u3b);
        let (c1, c2) = if swapped { (b, a) } else { (a, b) };
        out[(i, 0)] = c1 as f64;
        out[(i, 1)] = c2 as f64;
    }
    DataMatrix::new(out)
}

/// Log-normal mixture: log λ ~ N(log_mu, log_sigma), then independent Poisson
/// columns given λ. A positive semidefinite log_sigma is accepted so the
/// degenerate fixed-rate case works.
pub fn mvpois_sample_compound(
    log_mu: &DVector<f64>,
    log_sigma: &DMatrix<f64>,
    n: usize,
    stream: &RngStream,
) -> Result<DataMatrix> {
    let p = log_mu.len();
    if log_sigma.nrows() != p || log_sigma.ncols() != p {
        return Err(Error::Dimension(format!(
            "log_sigma is {}x{}, expected {p}x{p}",
            log_sigma.nrows(),
            log_sigma.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::TooSmall("sample size must be positive".into()));
    }
    let eig = sym_eigen(log_sigma)?;
    let tol = 1e-10 * eig.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if eig.values.iter().any(|v| *v < -tol) {
        return Err(Error::Singular("log_sigma is not positive semidefinite".into()));
    }
    let root = &eig.vectors * DMatrix::from_diagonal(&eig.values.map(|v| v.max(0.0).sqrt()));
    let mut out = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut r = stream.derive(i as u64).rng();
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut r));
        let loglam = log_mu + &root * z;
        for k in 0..p {
            out[(i, k)] = poisson_draw(loglam[k].exp(), &mut r);
        }
    }
    DataMatrix::new(out)
}
