use super::CountVector;
use crate::error::{invalid, Error, Result};
use crate::perm::{permutation_pvalue, DEFAULT_PERMUTATIONS};
use crate::result::{NullDist, TestResult};
use crate::rng::{RngStream, StreamRng};
use crate::special::{chi2_sf, ln_factorial, log_sum_exp, normal_sf, poisson_ln_pmf};
use rand::seq::SliceRandom;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialParams {
    pi: Vec<f64>,
}

impl MultinomialParams {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return invalid("probability vector is empty");
        }
        if pi.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("probabilities must be finite and nonnegative");
        }
        let s: f64 = pi.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {s}, not 1"));
        }
        Ok(Self { pi })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0) {
            return invalid("weights must have a positive sum");
        }
        let mut pi: Vec<f64> = w.iter().map(|v| v / s).collect();
        // push the rounding residue into the largest entry
        let resid = 1.0 - pi.iter().sum::<f64>();
        let (imax, _) = pi.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        pi[imax] += resid;
        Self::new(pi)
    }

    pub fn uniform(p: usize) -> Self {
        Self { pi: vec![1.0 / p as f64; p] }
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn p(&self) -> usize {
        self.pi.len()
    }
}

pub fn multinomial_logpmf(x: &CountVector, params: &MultinomialParams) -> Result<f64> {
    if x.p() != params.p() {
        return Err(Error::Dimension(format!("counts have {} categories, pi has {}", x.p(), params.p())));
    }
    let mut acc = ln_factorial(x.total());
    for (&k, &pi) in x.counts().iter().zip(params.pi()) {
        if k == 0 {
            continue;
        }
        if pi == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += k as f64 * pi.ln() - ln_factorial(k);
    }
    Ok(acc)
}

/// Maximum likelihood estimate counts / total.
pub fn multinomial_mle(x: &CountVector) -> Result<MultinomialParams> {
    let n = x.total();
    if n == 0 {
        return Err(Error::TooSmall("total count is zero".into()));
    }
    Ok(MultinomialParams { pi: x.counts().iter().map(|&k| k as f64 / n as f64).collect() })
}

/// One multinomial draw by sequential conditional binomials.
pub fn multinomial_sample(total: u64, params: &MultinomialParams, rng: &mut StreamRng) -> CountVector {
    let mut left = total;
    let mut mass = 1.0;
    let p = params.p();
    let mut out = vec![0u64; p];
    for (k, &pi) in params.pi().iter().enumerate() {
        if left == 0 {
            break;
        }
        if k == p - 1 {
            out[k] = left;
            break;
        }
        let prob = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, prob).expect("valid binomial").sample(rng);
        out[k] = draw;
        left -= draw;
        mass -= pi;
    }
    CountVector::new(out)
}

/// Multinomial CDF P(X ≤ a) through the Poisson representation with scale `s`
/// (default N). Truncated-Poisson convolution is carried out in log space.
pub fn levin_cdf(a: &[u64], total: u64, params: &MultinomialParams, s: Option<f64>) -> Result<f64> {
    if a.len() != params.p() {
        return Err(Error::Dimension(format!("bounds have {} entries, pi has {}", a.len(), params.p())));
    }
    if total == 0 {
        return Ok(1.0);
    }
    let s = s.unwrap_or(total as f64);
    if !(s > 0.0 && s.is_finite()) {
        return invalid(format!("scale s must be positive, got {s}"));
    }
    let n = total as usize;
    let mut log_prod = 0.0;
    // log pmf of the running sum of truncated variables, support 0..=n
    let mut conv = vec![f64::NEG_INFINITY; n + 1];
    conv[0] = 0.0;
    for (&ak, &pi) in a.iter().zip(params.pi()) {
        let lam = s * pi;
        let top = ak.min(total) as usize;
        let pmf: Vec<f64> = (0..=top).map(|j| poisson_ln_pmf(j as u64, lam)).collect();
        let log_cdf = if ak <= total {
            log_sum_exp(&pmf)
        } else {
            // terms past the mode decay fast; stop once negligible
            let cap = ak.min(total.max((lam + 40.0 * lam.sqrt() + 40.0).ceil() as u64));
            let tail: Vec<f64> = (top as u64 + 1..=cap).map(|j| poisson_ln_pmf(j, lam)).collect();
            log_sum_exp(&[log_sum_exp(&pmf), log_sum_exp(&tail)])
        };
        if log_cdf == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        log_prod += log_cdf;
        let mut next = vec![f64::NEG_INFINITY; n + 1];
        let mut terms = Vec::with_capacity(top + 1);
        for (t, slot) in next.iter_mut().enumerate() {
            terms.clear();
            for j in 0..=top.min(t) {
                let prev = conv[t - j];
                if prev > f64::NEG_INFINITY && pmf[j] > f64::NEG_INFINITY {
                    terms.push(prev + pmf[j] - log_cdf);
                }
            }
            *slot = log_sum_exp(&terms);
        }
        conv = next;
    }
    let log_f = ln_factorial(total) - total as f64 * s.ln() + s + log_prod + conv[n];
    if log_f.is_nan() || log_f == f64::INFINITY {
        return Err(Error::Numerical(format!("multinomial CDF overflowed (log value {log_f})")));
    }
    let f = log_f.exp();
    if !f.is_finite() {
        return Err(Error::Numerical("multinomial CDF overflowed".into()));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultinomialMethod {
    Pearson,
    Lrt,
    Chan1,
    Chan2,
    Pp,
}

impl fmt::Display for MultinomialMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pearson => "pearson",
            Self::Lrt => "lrt",
            Self::Chan1 => "chan1",
            Self::Chan2 => "chan2",
            Self::Pp => "pp",
        })
    }
}

impl FromStr for MultinomialMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pearson" => Self::Pearson,
            "lrt" => Self::Lrt,
            "chan1" => Self::Chan1,
            "chan2" => Self::Chan2,
            "pp" => Self::Pp,
            other => return invalid(format!("unknown multinomial method '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialTestConfig {
    pub method: MultinomialMethod,
    pub permutations: usize,
    /// χ² degrees of freedom for pearson/lrt; default is retained categories − 1.
    pub df: Option<f64>,
}

impl MultinomialTestConfig {
    pub fn new(method: MultinomialMethod) -> Self {
        Self { method, permutations: DEFAULT_PERMUTATIONS, df: None }
    }
}

fn pearson(x: &[u64], y: &[u64]) -> f64 {
    let n: u64 = x.iter().sum();
    let m: u64 = y.iter().sum();
    let tot = (n + m) as f64;
    let mut t = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        if a + b == 0 {
            continue;
        }
        let pi = (a + b) as f64 / tot;
        let ex = n as f64 * pi;
        let ey = m as f64 * pi;
        t += (a as f64 - ex).powi(2) / ex + (b as f64 - ey).powi(2) / ey;
    }
    t
}

fn xlogy_ratio(k: u64, num: f64, den: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * (num / den).ln()
    }
}

/// G² = 2 Σ [X log(π̂_X/π̂) + Y log(π̂_Y/π̂)].
fn lrt(x: &[u64], y: &[u64]) -> f64 {
    let n: u64 = x.iter().sum();
    let m: u64 = y.iter().sum();
    let tot = (n + m) as f64;
    let mut t = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        if a + b == 0 {
            continue;
        }
        let pi = (a + b) as f64 / tot;
        t += xlogy_ratio(a, a as f64 / n as f64, pi) + xlogy_ratio(b, b as f64 / m as f64, pi);
    }
    2.0 * t
}

fn chan1(x: &[u64], y: &[u64]) -> f64 {
    x.iter()
        .zip(y)
        .filter(|(a, b)| **a + **b > 0)
        .map(|(&a, &b)| {
            let (a, b) = (a as f64, b as f64);
            ((a - b).powi(2) - a - b) / (a + b)
        })
        .sum()
}

fn chan2(x: &[u64], y: &[u64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let (a, b) = (a as f64, b as f64);
            (a - b).powi(2) - a - b
        })
        .sum()
}

struct PpParts {
    statistic: f64,
    concentration: f64,
    scale: f64,
}

fn plunkett_park(x: &[u64], y: &[u64]) -> PpParts {
    let n = x.iter().sum::<u64>() as f64;
    let m = y.iter().sum::<u64>() as f64;
    let (mut num, mut var) = (0.0, 0.0);
    let (mut max_sq, mut norm_sq, mut sum_sq) = (0.0f64, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let px = a as f64 / n;
        let py = b as f64 / m;
        num += (px - py).powi(2) - a as f64 / (n * n) - b as f64 / (m * m);
        var += 2.0 / (n * n) * (px * px - px / n) + 2.0 / (m * m) * (py * py - py / m) + 4.0 / (n * m) * px * py;
        let pooled = (a + b) as f64 / (n + m);
        max_sq = max_sq.max(pooled * pooled);
        norm_sq += pooled * pooled;
        sum_sq += (px + py).powi(2);
    }
    let statistic = if var > 0.0 { num / var.sqrt() } else { f64::NAN };
    PpParts { statistic, concentration: max_sq / norm_sq, scale: (n + m) * sum_sq }
}

fn statistic(method: MultinomialMethod, x: &[u64], y: &[u64]) -> f64 {
    match method {
        MultinomialMethod::Pearson => pearson(x, y),
        MultinomialMethod::Lrt => lrt(x, y),
        MultinomialMethod::Chan1 => chan1(x, y),
        MultinomialMethod::Chan2 => chan2(x, y),
        MultinomialMethod::Pp => plunkett_park(x, y).statistic,
    }
}

/// Reassigns the n + m pooled draws to the two groups at random and re-tallies.
fn relabeled(labels: &[usize], n: usize, p: usize, rng: &mut StreamRng) -> (Vec<u64>, Vec<u64>) {
    let mut pool = labels.to_vec();
    let (head, _) = pool.partial_shuffle(rng, n);
    let mut x = vec![0u64; p];
    for &k in head.iter() {
        x[k] += 1;
    }
    let mut y = vec![0u64; p];
    for &k in labels {
        y[k] += 1;
    }
    for (b, a) in y.iter_mut().zip(&x) {
        *b -= a;
    }
    (x, y)
}

/// Two-sample test of equal category probabilities.
pub fn multinomial_two_sample(
    x: &CountVector,
    y: &CountVector,
    cfg: &MultinomialTestConfig,
    stream: &RngStream,
) -> Result<TestResult> {
    if x.p() != y.p() {
        return Err(Error::Dimension(format!("samples have {} and {} categories", x.p(), y.p())));
    }
    let (n, m) = (x.total(), y.total());
    if n == 0 || m == 0 {
        return Err(Error::TooSmall("both samples need a positive total count".into()));
    }
    let (xc, yc) = (x.counts(), y.counts());
    let retained = xc.iter().zip(yc).filter(|(a, b)| **a + **b > 0).count();
    let method = cfg.method;
    let name = format!("multinomial-{method}");
    let t = statistic(method, xc, yc);
    let result = match method {
        MultinomialMethod::Pearson | MultinomialMethod::Lrt => {
            let df = cfg.df.unwrap_or(retained as f64 - 1.0);
            if !(df > 0.0) {
                return Err(Error::TooSmall(format!("chi-square reference needs df > 0 (got {df})")));
            }
            TestResult::new(&name, t, chi2_sf(t, df), NullDist::ChiSquare { df })
        }
        MultinomialMethod::Chan1 | MultinomialMethod::Chan2 => {
            let p = x.p();
            let labels: Vec<usize> = xc
                .iter()
                .zip(yc)
                .enumerate()
                .flat_map(|(k, (a, b))| std::iter::repeat(k).take((a + b) as usize))
                .collect();
            let pv = permutation_pvalue(t, cfg.permutations, stream, |r| {
                let (px, py) = relabeled(&labels, n as usize, p, r);
                statistic(method, &px, &py)
            });
            TestResult::new(&name, t, pv, NullDist::Permutation { count: cfg.permutations })
        }
        MultinomialMethod::Pp => {
            let parts = plunkett_park(xc, yc);
            if !parts.statistic.is_finite() {
                return Err(Error::Numerical("variance estimate is zero".into()));
            }
            TestResult::new(&name, t, normal_sf(t), NullDist::StandardNormal)
                .with_diag("concentration_ratio", parts.concentration)
                .with_diag("scale_condition", parts.scale)
        }
    };
    Ok(result.with_diag("retained_categories", retained as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_and_lrt_vanish_for_identical_profiles() {
        let x = [3, 0, 5, 2];
        assert_eq!(pearson(&x, &x), 0.0);
        assert_eq!(lrt(&x, &x), 0.0);
        assert!((chan1(&x, &x) + 3.0).abs() < 1e-15);
    }

    #[test]
    fn relabel_preserves_margins() {
        let labels = vec![0, 0, 1, 2, 2, 2];
        let mut r = RngStream::new(1, 0).rng();
        let (x, y) = relabeled(&labels, 2, 3, &mut r);
        assert_eq!(x.iter().sum::<u64>(), 2);
        assert_eq!(x.iter().zip(&y).map(|(a, b)| a + b).collect::<Vec<_>>(), vec![2, 1, 3]);
    }
}
