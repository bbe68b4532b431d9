use super::multinomial::{multinomial_sample, MultinomialParams};
use super::CountVector;
use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::special::{digamma, ln_gamma, trigamma};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirMultParams {
    theta: Vec<f64>,
    theta0: f64,
}

impl DirMultParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return invalid("theta is empty");
        }
        if let Some(v) = theta.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return invalid(format!("theta entries must be positive and finite, got {v}"));
        }
        let theta0 = theta.iter().sum();
        Ok(Self { theta, theta0 })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }
}

fn check_dim(x: &CountVector, p: usize) -> Result<()> {
    if x.p() != p {
        return Err(Error::Dimension(format!("counts have {} categories, theta has {p}", x.p())));
    }
    Ok(())
}

pub fn dirmult_logpmf(x: &CountVector, params: &DirMultParams) -> Result<f64> {
    check_dim(x, params.p())?;
    let n = x.total() as f64;
    let t0 = params.theta0;
    let mut acc = ln_gamma(n + 1.0) + ln_gamma(t0) - ln_gamma(n + t0);
    for (&k, &t) in x.counts().iter().zip(params.theta()) {
        if k > 0 {
            let k = k as f64;
            acc += ln_gamma(k + t) - ln_gamma(k + 1.0) - ln_gamma(t);
        }
    }
    Ok(acc)
}

/// Mean, covariance and the precision of the first p − 1 coordinates
/// (the full covariance is singular because the total is fixed).
#[derive(Debug, Clone, PartialEq)]
pub struct DirMultMoments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub precision: DMatrix<f64>,
}

pub fn dirmult_moments(params: &DirMultParams, total: u64) -> Result<DirMultMoments> {
    if total == 0 {
        return Err(Error::TooSmall("total count must be at least 1".into()));
    }
    let p = params.p();
    if p < 2 {
        return Err(Error::Dimension("need at least two categories".into()));
    }
    let n = total as f64;
    let t0 = params.theta0;
    let pi = DVector::from_iterator(p, params.theta.iter().map(|t| t / t0));
    let c = (n + t0) / (1.0 + t0);
    let scale = n * c;
    let covariance = (DMatrix::from_diagonal(&pi) - &pi * pi.transpose()) * scale;
    // (diag(π_r) − π_r π_rᵀ)⁻¹ = diag(1/π_r) + 𝟙𝟙ᵀ/π_p by the rank-one update
    let last = pi[p - 1];
    let r = p - 1;
    let precision = DMatrix::from_fn(r, r, |i, j| {
        let d = if i == j { 1.0 / pi[i] } else { 0.0 };
        (d + 1.0 / last) / scale
    });
    Ok(DirMultMoments { mean: pi * n, covariance, precision })
}

/// Draws a Dirichlet probability vector then a multinomial count for each total.
pub fn dirmult_sample(params: &DirMultParams, totals: &[u64], stream: &RngStream) -> Vec<CountVector> {
    let gammas: Vec<Gamma<f64>> = params.theta.iter().map(|&t| Gamma::new(t, 1.0).expect("positive shape")).collect();
    totals
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut r = stream.derive(i as u64).rng();
            let w: Vec<f64> = gammas.iter().map(|g| g.sample(&mut r)).collect();
            let pi = MultinomialParams::from_weights(&w)
                .unwrap_or_else(|_| MultinomialParams::from_weights(&params.theta).expect("positive theta"));
            multinomial_sample(n, &pi, &mut r)
        })
        .collect()
}

fn check_sample(counts: &[CountVector], p: usize) -> Result<()> {
    for x in counts {
        check_dim(x, p)?;
    }
    Ok(())
}

/// Log-likelihood of independent vectors, including the multinomial coefficients.
pub fn dirmult_loglik(counts: &[CountVector], theta: &[f64]) -> Result<f64> {
    let params = DirMultParams::new(theta.to_vec())?;
    check_sample(counts, params.p())?;
    counts.iter().map(|x| dirmult_logpmf(x, &params)).sum()
}

pub fn dirmult_gradient(counts: &[CountVector], theta: &[f64]) -> Result<Vec<f64>> {
    let params = DirMultParams::new(theta.to_vec())?;
    check_sample(counts, params.p())?;
    let t0 = params.theta0;
    let p = params.p();
    let mut g = vec![0.0; p];
    let mut common = 0.0;
    for x in counts {
        common += digamma(t0) - digamma(x.total() as f64 + t0);
        for (k, &c) in x.counts().iter().enumerate() {
            if c > 0 {
                g[k] += digamma(c as f64 + theta[k]) - digamma(theta[k]);
            }
        }
    }
    g.iter_mut().for_each(|v| *v += common);
    Ok(g)
}

/// Hessian as diag(d) + c·𝟙𝟙ᵀ; returns (d, c).
pub fn dirmult_hessian_parts(counts: &[CountVector], theta: &[f64]) -> Result<(Vec<f64>, f64)> {
    let params = DirMultParams::new(theta.to_vec())?;
    check_sample(counts, params.p())?;
    let t0 = params.theta0;
    let mut d = vec![0.0; params.p()];
    let mut c = 0.0;
    for x in counts {
        c += trigamma(t0) - trigamma(x.total() as f64 + t0);
        for (k, &v) in x.counts().iter().enumerate() {
            if v > 0 {
                d[k] += trigamma(v as f64 + theta[k]) - trigamma(theta[k]);
            }
        }
    }
    Ok((d, c))
}

/// (diag(d) + c𝟙𝟙ᵀ)⁻¹ as a dense matrix, built from the rank-one formula.
pub fn rank_one_inverse(d: &[f64], c: f64) -> Result<DMatrix<f64>> {
    let (inv, k) = rank_one_factors(d, c)?;
    let p = d.len();
    Ok(DMatrix::from_fn(p, p, |i, j| if i == j { inv[i] } else { 0.0 } - k * inv[i] * inv[j]))
}

fn rank_one_factors(d: &[f64], c: f64) -> Result<(Vec<f64>, f64)> {
    if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::Singular("diagonal part has a zero entry".into()));
    }
    let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
    let denom = 1.0 + c * inv.iter().sum::<f64>();
    if denom.abs() < 1e-300 {
        return Err(Error::Singular("rank-one update is singular".into()));
    }
    Ok((inv, c / denom))
}

/// Solves (diag(d) + c𝟙𝟙ᵀ) z = g in O(p).
pub fn rank_one_solve(d: &[f64], c: f64, g: &[f64]) -> Result<Vec<f64>> {
    let (inv, k) = rank_one_factors(d, c)?;
    let dot: f64 = inv.iter().zip(g).map(|(a, b)| a * b).sum();
    Ok(inv.iter().zip(g).map(|(a, b)| a * b - k * a * dot).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirMultInit {
    Ronning,
    Mom,
    User(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirMultFitConfig {
    pub init: DirMultInit,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DirMultFitConfig {
    fn default() -> Self {
        Self { init: DirMultInit::Ronning, tol: 1e-8, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirMultFit {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Log-likelihood after every accepted step, starting at the initial value.
    #[serde(skip)]
    pub loglik_trace: Vec<f64>,
}

impl DirMultFit {
    pub fn params(&self) -> DirMultParams {
        DirMultParams::new(self.theta.clone()).expect("fitted theta is positive")
    }
}

/// Method-of-moments start: pooled proportions scaled by θ₀ from the
/// Pearson-type dispersion c = (N + θ₀)/(1 + θ₀).
fn mom_start(counts: &[CountVector], pi: &[f64]) -> Vec<f64> {
    let n = counts.len() as f64;
    let p = pi.len() as f64;
    let mut disp = 0.0;
    let mut mean_total = 0.0;
    for x in counts {
        let tot = x.total() as f64;
        mean_total += tot / n;
        if tot == 0.0 {
            continue;
        }
        disp += x.counts().iter().zip(pi).map(|(&k, &q)| (k as f64 - tot * q).powi(2) / (tot * q)).sum::<f64>();
    }
    let c = disp / ((n - 1.0) * (p - 1.0)).max(1.0);
    let theta0 = if c > 1.0 + 1e-9 && c < mean_total {
        (mean_total - c) / (c - 1.0)
    } else if c >= mean_total {
        1e-2
    } else {
        // no detectable overdispersion: start close to the multinomial limit
        100.0 * mean_total.max(1.0)
    };
    pi.iter().map(|q| (q * theta0).max(1e-8)).collect()
}

fn initial_theta(counts: &[CountVector], init: &DirMultInit, pi: &[f64]) -> Result<Vec<f64>> {
    match init {
        DirMultInit::User(t) => {
            if t.len() != pi.len() {
                return Err(Error::Dimension(format!("initial theta has {} entries, data has {}", t.len(), pi.len())));
            }
            Ok(DirMultParams::new(t.clone())?.theta)
        }
        DirMultInit::Mom => Ok(mom_start(counts, pi)),
        DirMultInit::Ronning => {
            let min = counts.iter().flat_map(|x| x.counts().iter().copied()).min().unwrap_or(0);
            if min > 0 {
                Ok(vec![min as f64; pi.len()])
            } else {
                let m = mom_start(counts, pi).into_iter().fold(f64::INFINITY, f64::min);
                Ok(vec![m; pi.len()])
            }
        }
    }
}

const MAX_HALVINGS: usize = 60;

/// Newton-Raphson maximum likelihood with the rank-one Hessian inverse.
/// Steps leaving the positive orthant or lowering the likelihood are halved.
pub fn dirmult_fit(counts: &[CountVector], cfg: &DirMultFitConfig) -> Result<DirMultFit> {
    if counts.len() < 2 {
        return Err(Error::TooSmall("need at least two count vectors".into()));
    }
    let p = counts[0].p();
    if p < 2 {
        return Err(Error::Dimension("need at least two categories".into()));
    }
    check_sample(counts, p)?;
    let mut col = vec![0u64; p];
    for x in counts {
        for (c, v) in col.iter_mut().zip(x.counts()) {
            *c += v;
        }
    }
    if let Some(k) = col.iter().position(|&c| c == 0) {
        return invalid(format!("category {} is never observed", k + 1));
    }
    let grand: u64 = col.iter().sum();
    let pi: Vec<f64> = col.iter().map(|&c| c as f64 / grand as f64).collect();

    let mut theta = initial_theta(counts, &cfg.init, &pi)?;
    let mut ll = dirmult_loglik(counts, &theta)?;
    let mut trace = vec![ll];
    let max_norm = |g: &[f64]| g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for iter in 0..=cfg.max_iter {
        let g = dirmult_gradient(counts, &theta)?;
        let gn = max_norm(&g);
        if gn <= cfg.tol {
            return Ok(DirMultFit { theta, loglik: ll, iterations: iter, grad_norm: gn, loglik_trace: trace });
        }
        if iter == cfg.max_iter {
            return Err(Error::NonConvergence { iterations: iter, grad_norm: gn });
        }
        let (d, c) = dirmult_hessian_parts(counts, &theta)?;
        let mut step: Vec<f64> = match rank_one_solve(&d, c, &g) {
            Ok(z) => z.iter().map(|v| -v).collect(),
            Err(_) => vec![0.0; p],
        };
        // fall back to scaled gradient ascent when Newton is not an ascent direction
        let ascent: f64 = step.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(ascent > 0.0) {
            step = theta.iter().zip(&g).map(|(t, v)| t * v / (1.0 + gn)).collect();
        }
        let slack = 1e-13 * ll.abs().max(1.0);
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
            if cand.iter().all(|v| *v > 0.0 && v.is_finite()) {
                let cll = dirmult_loglik(counts, &cand)?;
                if cll >= ll - slack {
                    theta = cand;
                    ll = cll;
                    trace.push(ll);
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: iter + 1, grad_norm: gn });
        }
    }
    unreachable!("loop returns on its final iteration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_solve_matches_inverse() {
        let d = [-3.0, -1.5, -2.0];
        let c = 0.7;
        let g = [1.0, -2.0, 0.5];
        let z = rank_one_solve(&d, c, &g).unwrap();
        let inv = rank_one_inverse(&d, c).unwrap();
        let z2 = inv * DVector::from_row_slice(&g);
        for k in 0..3 {
            assert!((z[k] - z2[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn moments_total_is_constant() {
        let p = DirMultParams::new(vec![1.0, 2.0, 3.0]).unwrap();
        let m = dirmult_moments(&p, 10).unwrap();
        assert!((m.mean.sum() - 10.0).abs() < 1e-12);
        assert!(m.covariance.row_sum().abs().max() < 1e-12);
    }
}
