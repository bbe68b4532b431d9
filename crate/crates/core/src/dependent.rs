//! Two-sample mean testing for M-dependent stationary sequences.
//!
//! Lags are 0-based throughout: lag 0 is the contemporaneous covariance.
//! Rows of a [`DataMatrix`] are taken in time order.

use crate::data::{DataMatrix, TwoSample};
use crate::error::{Error, Result};
use crate::linalg::center;
use crate::result::{NullDist, TestResult};
use crate::rng::RngStream;
use crate::special::normal_sf;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

/// Largest acceptable condition number of the truncated Θ_n.
pub const THETA_CONDITION_LIMIT: f64 = 1e8;

/// n⁻¹ Σ_{i<n−a} (X_i − X̄)(X_{i+a} − X̄)ᵀ.
pub fn autocov_biased(m: &DataMatrix, a: usize) -> Result<DMatrix<f64>> {
    let n = m.n();
    if a >= n {
        return Err(Error::InvalidInput(format!("lag {a} out of range for n={n}")));
    }
    let c = center(m.values());
    let head = c.rows(0, n - a);
    let tail = c.rows(a, n - a);
    Ok(head.tr_mul(&tail) / n as f64)
}

fn lag_trace(c: &DMatrix<f64>, a: usize) -> f64 {
    let n = c.nrows();
    c.rows(0, n - a).dot(&c.rows(a, n - a)) / n as f64
}

/// Traces of the biased autocovariances at lags 0..=lag_cap.
pub fn raw_traces(m: &DataMatrix, lag_cap: usize) -> Result<Vec<f64>> {
    if lag_cap >= m.n() {
        return Err(Error::InvalidInput(format!("lag cap {lag_cap} needs n > {lag_cap}, got n={}", m.n())));
    }
    let c = center(m.values());
    Ok((0..=lag_cap).map(|a| lag_trace(&c, a)).collect())
}

/// Number of s in 1..=n with |c − s| = b.
fn at_distance(c: i64, b: i64, n: i64) -> f64 {
    if b == 0 {
        f64::from(c >= 1 && c <= n)
    } else {
        f64::from(c - b >= 1) + f64::from(c + b <= n)
    }
}

/// Coefficient of tr Σ(b) in E tr Σ̂(a) for a stationary sequence of
/// length n (0-based lags, exact):
///
/// (1−a/n)·𝟙(a=b) + (1−a/n)(1−b/n)(2−𝟙(b=0))/n
///   − n⁻² Σ_{t=1}^{n−a} Σ_{s=1}^{n} [𝟙(|t+a−s| = b) + 𝟙(|t−s| = b)].
pub fn theta_coefficient(n: usize, a: usize, b: usize) -> Result<f64> {
    if a >= n || b >= n {
        return Err(Error::InvalidInput(format!("lags ({a}, {b}) out of range for n={n}")));
    }
    let nf = n as f64;
    let (af, bf) = (a as f64, b as f64);
    let lead = if a == b { 1.0 - af / nf } else { 0.0 };
    let mean_term = (1.0 - af / nf) * (1.0 - bf / nf) * (2.0 - f64::from(b == 0)) / nf;
    let (ni, ai, bi) = (n as i64, a as i64, b as i64);
    let count: f64 = (1..=ni - ai).map(|t| at_distance(t + ai, bi, ni) + at_distance(t, bi, ni)).sum();
    Ok(lead + mean_term - count / (nf * nf))
}

/// Θ_n restricted to lags 0..=lag_cap.
pub fn theta_matrix(n: usize, lag_cap: usize) -> Result<DMatrix<f64>> {
    let mut t = DMatrix::zeros(lag_cap + 1, lag_cap + 1);
    for a in 0..=lag_cap {
        for b in 0..=lag_cap {
            t[(a, b)] = theta_coefficient(n, a, b)?;
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocovTraceSet {
    pub raw_traces: Vec<f64>,
    /// Θ⁻¹ applied to the raw traces; unbiased when the true order is ≤ lag_cap.
    pub debiased_traces: Vec<f64>,
    pub lag_cap: usize,
}

fn solve_theta(n: usize, raw: &[f64]) -> Result<Vec<f64>> {
    let theta = theta_matrix(n, raw.len() - 1)?;
    let sv = theta.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= THETA_CONDITION_LIMIT) {
        return Err(Error::Numerical(format!("Θ_n is ill-conditioned (condition number {cond:.3e})")));
    }
    let sol =
        theta.lu().solve(&DVector::from_column_slice(raw)).ok_or_else(|| Error::Singular("Θ_n is singular".into()))?;
    Ok(sol.iter().copied().collect())
}

pub fn debiased_traces(m: &DataMatrix, lag_cap: usize) -> Result<AutocovTraceSet> {
    let raw = raw_traces(m, lag_cap)?;
    let debiased = solve_theta(m.n(), &raw)?;
    Ok(AutocovTraceSet { raw_traces: raw, debiased_traces: debiased, lag_cap })
}

/// Θ is solved over two lags beyond the working order.
fn lag_cap_for(order: usize, n: usize) -> usize {
    (order + 2).min(n - 1)
}

/// Σ_{|a| ≤ M} (1 − |a|/n) tr̂ Σ(a) / n, the mean-square correction for one group.
fn correction(traces: &[f64], order: usize, n: usize) -> f64 {
    let nf = n as f64;
    let mut acc = traces[0];
    for (a, t) in traces.iter().enumerate().take(order.min(n - 1) + 1).skip(1) {
        acc += 2.0 * (1.0 - a as f64 / nf) * t;
    }
    acc / nf
}

fn check_order(s: &TwoSample, order: usize) -> Result<()> {
    if order >= s.n().min(s.m()) {
        return Err(Error::InvalidInput(format!("order M={order} must be below min(n, m)={}", s.n().min(s.m()))));
    }
    Ok(())
}

/// ‖X̄−Ȳ‖² minus the debiased long-run variance corrections, unbiased for
/// ‖μ₁−μ₂‖² when both sequences are M-dependent.
pub fn m_n_functional(s: &TwoSample, order: usize) -> Result<f64> {
    check_order(s, order)?;
    Ok(m_n_parts(s, order)?.0)
}

fn m_n_parts(s: &TwoSample, order: usize) -> Result<(f64, AutocovTraceSet, AutocovTraceSet)> {
    let (n, m) = (s.n(), s.m());
    let tx = debiased_traces(&s.x, lag_cap_for(order, n))?;
    let ty = debiased_traces(&s.y, lag_cap_for(order, m))?;
    let d = crate::linalg::sample_mean(&s.x) - crate::linalg::sample_mean(&s.y);
    let value =
        d.norm_squared() - correction(&tx.debiased_traces, order, n) - correction(&ty.debiased_traces, order, m);
    Ok((value, tx, ty))
}

/// Estimate of Σ_{a,c} w_a v_c tr(Σ_g(a) Σ_h(c)ᵀ) from products
/// P_ij · P_{i+a, j+c} where P = E_g E_hᵀ, averaged over index pairs whose
/// lag windows are more than M apart (all pairs when g ≠ h).
fn windowed_trace(p: &DMatrix<f64>, order: usize, w: &[f64], v: &[f64], same: bool) -> f64 {
    let (rows, cols) = (p.nrows() as i64, p.ncols() as i64);
    let mo = order as i64;
    let mut total = 0.0;
    for a in -mo..=mo {
        for c in -mo..=mo {
            let weight = w[a.unsigned_abs() as usize] * v[c.unsigned_abs() as usize];
            let (mut sum, mut count) = (0.0, 0usize);
            for i in 0.max(-a)..rows.min(rows - a) {
                for j in 0.max(-c)..cols.min(cols - c) {
                    if same {
                        let gap = [j - i, j + c - i, j - i - a, j + c - i - a].iter().map(|g| g.abs()).min().unwrap();
                        if gap <= mo {
                            continue;
                        }
                    }
                    sum += p[(i as usize, j as usize)] * p[((i + a) as usize, (j + c) as usize)];
                    count += 1;
                }
            }
            if count > 0 {
                total += weight * sum / count as f64;
            }
        }
    }
    total
}

/// M_n standardized by a plug-in of its null variance
/// 2 tr{(Ω₁/n + Ω₂/m)²}, Ω_g = Σ_{|a|≤M} (1−|a|/n_g) Σ_g(a).
/// Reference law N(0, 1), upper tail.
pub fn apr_test(s: &TwoSample, order: usize) -> Result<TestResult> {
    let (n, m) = (s.n(), s.m());
    if 4 * order >= n.min(m) {
        return Err(Error::TooSmall(format!("order M={order} needs min(n, m) > 4M, got {}", n.min(m))));
    }
    let (stat, tx, ty) = m_n_parts(s, order)?;
    let weights = |len: usize| (0..=order).map(|a| 1.0 - a as f64 / len as f64).collect::<Vec<_>>();
    let (wx, wy) = (weights(n), weights(m));
    let ex = center(s.x.values());
    let ey = center(s.y.values());
    let t1 = windowed_trace(&(&ex * ex.transpose()), order, &wx, &wx, true);
    let t2 = windowed_trace(&(&ey * ey.transpose()), order, &wy, &wy, true);
    let t12 = windowed_trace(&(&ex * ey.transpose()), order, &wx, &wy, false);
    let (nf, mf) = (n as f64, m as f64);
    let var = 2.0 * (t1 / (nf * nf) + t2 / (mf * mf) + 2.0 * t12 / (nf * mf));
    if !(var > 0.0) {
        return Err(Error::Numerical(format!("variance estimate is not positive ({var:.3e})")));
    }
    let z = stat / var.sqrt();
    let mut res = TestResult::new("apr", z, normal_sf(z), NullDist::StandardNormal)
        .with_diag("functional", stat)
        .with_diag("variance", var)
        .with_diag("order", order as f64);
    for (a, t) in tx.debiased_traces.iter().enumerate().take(order + 1) {
        res = res.with_diag(&format!("x_trace_lag{a}"), *t);
    }
    for (a, t) in ty.debiased_traces.iter().enumerate().take(order + 1) {
        res = res.with_diag(&format!("y_trace_lag{a}"), *t);
    }
    Ok(res)
}

/// Gaussian moving average X_i = μ + Σ_{j=0}^{M} A_j ε_{i−j}.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProcessSpec {
    pub mu: DVector<f64>,
    /// A_0, …, A_M, each p × p.
    pub ma_coefficients: Vec<DMatrix<f64>>,
}

impl StationaryProcessSpec {
    pub fn new(mu: DVector<f64>, ma_coefficients: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = mu.len();
        if ma_coefficients.is_empty() {
            return Err(Error::InvalidInput("need at least A_0".into()));
        }
        if ma_coefficients.iter().any(|a| a.nrows() != p || a.ncols() != p) {
            return Err(Error::Dimension(format!("MA coefficients must be {p}×{p}")));
        }
        Ok(Self { mu, ma_coefficients })
    }

    pub fn order(&self) -> usize {
        self.ma_coefficients.len() - 1
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    /// E[(X_i − μ)(X_{i+a} − μ)ᵀ] = Σ_j A_j A_{j+a}ᵀ; zero beyond the order.
    pub fn autocovariance(&self, a: usize) -> DMatrix<f64> {
        let coef = &self.ma_coefficients;
        let mut acc = DMatrix::zeros(self.p(), self.p());
        for j in 0..coef.len().saturating_sub(a) {
            acc += &coef[j] * coef[j + a].transpose();
        }
        acc
    }
}

pub fn generate_ma_process(spec: &StationaryProcessSpec, n: usize, stream: &RngStream) -> Result<DataMatrix> {
    let order = spec.order();
    if n <= order {
        return Err(Error::InvalidInput(format!("need n > M (n={n}, M={order})")));
    }
    let p = spec.p();
    let mut rng = stream.rng();
    let eps = DMatrix::<f64>::from_fn(n + order, p, |_, _| StandardNormal.sample(&mut rng));
    let mut out = DMatrix::zeros(n, p);
    for (j, a) in spec.ma_coefficients.iter().enumerate() {
        // row i uses ε_{i−j}, stored at offset i + order − j
        out += eps.rows(order - j, n) * a.transpose();
    }
    for mut r in out.row_iter_mut() {
        r += spec.mu.transpose();
    }
    DataMatrix::new(out)
}
