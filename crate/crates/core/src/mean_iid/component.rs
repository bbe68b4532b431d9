use super::{stacked_residuals, trace_s_s2};
use crate::data::TwoSample;
use crate::error::{Error, Result};
use crate::linalg::column_means;
use crate::perm::{permutation_pvalue, shuffled_indices};
use crate::result::{NullDist, TestResult};
use crate::rng::RngStream;
use crate::special::{chi2_sf, f_sf};
use nalgebra::DMatrix;

/// Denominator used per coordinate in the Chung-Fraser sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChungFraserScale {
    /// |d_k| / √S_kk, a sum of t-type statistics (scale invariant).
    #[default]
    StdDev,
    /// |d_k| / S_kk.
    Variance,
}

fn cf_stat(x: &DMatrix<f64>, y: &DMatrix<f64>, scale: ChungFraserScale) -> Result<f64> {
    let d = column_means(x) - column_means(y);
    let z = stacked_residuals(x, y);
    let dof = (x.nrows() + y.nrows()) as f64 - 2.0;
    let mut t = 0.0;
    for (k, c) in z.column_iter().enumerate() {
        let skk = c.norm_squared() / dof;
        if !(skk > 0.0) {
            return Err(Error::InvalidInput(format!("column {} has zero variance", k + 1)));
        }
        t += d[k].abs()
            / match scale {
                ChungFraserScale::StdDev => skk.sqrt(),
                ChungFraserScale::Variance => skk,
            };
    }
    Ok(t)
}

fn split_rows(pooled: &DMatrix<f64>, idx: &[usize], n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = pooled.ncols();
    let x = DMatrix::from_fn(n, p, |i, k| pooled[(idx[i], k)]);
    let y = DMatrix::from_fn(idx.len() - n, p, |i, k| pooled[(idx[n + i], k)]);
    (x, y)
}

pub(crate) fn pool_rows(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut all = DMatrix::zeros(x.nrows() + y.nrows(), x.ncols());
    all.rows_mut(0, x.nrows()).copy_from(x);
    all.rows_mut(x.nrows(), y.nrows()).copy_from(y);
    all
}

/// Sum of per-coordinate standardized absolute mean differences, calibrated
/// by permuting group labels.
pub fn chung_fraser(
    s: &TwoSample,
    scale: ChungFraserScale,
    permutations: usize,
    rng: &RngStream,
) -> Result<TestResult> {
    let obs = cf_stat(s.x.values(), s.y.values(), scale)?;
    let pooled = pool_rows(s.x.values(), s.y.values());
    let n = s.n();
    let pv = permutation_pvalue(obs, permutations, rng, |r| {
        let idx = shuffled_indices(pooled.nrows(), r);
        let (x, y) = split_rows(&pooled, &idx, n);
        // a permuted column can only be constant if the pooled one is
        cf_stat(&x, &y, scale).unwrap_or(0.0)
    });
    Ok(TestResult::new("chung-fraser", obs, pv, NullDist::Permutation { count: permutations }))
}

/// Dempster's non-exact test: nm/(n+m)·‖X̄−Ȳ‖²/tr(S) against F(r̂, (n+m−2)r̂),
/// r̂ = tr²(S)/tr(S²).
pub fn dempster(s: &TwoSample) -> Result<TestResult> {
    let (n, m) = (s.n() as f64, s.m() as f64);
    let total = n + m;
    let z = stacked_residuals(s.x.values(), s.y.values());
    let (tr, tr2) = trace_s_s2(&z, total - 2.0);
    if !(tr > 0.0) {
        return Err(Error::Numerical("no residual variation".into()));
    }
    let d = column_means(s.x.values()) - column_means(s.y.values());
    let stat = n * m / total * d.norm_squared() / tr;
    let r = tr * tr / tr2;
    let d2 = (total - 2.0) * r;
    Ok(TestResult::new("dempster", stat, f_sf(stat, r, d2), NullDist::F { d1: r, d2 }).with_diag("r_hat", r))
}

/// Per-column summaries over observed entries.
struct ColumnStats {
    nk: f64,
    mk: f64,
    mean_x: f64,
    mean_y: f64,
    ss_x: f64,
    ss_y: f64,
}

fn column_stats(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    mask_x: Option<&DMatrix<bool>>,
    mask_y: Option<&DMatrix<bool>>,
    k: usize,
) -> ColumnStats {
    let collect = |a: &DMatrix<f64>, mask: Option<&DMatrix<bool>>| -> Vec<f64> {
        (0..a.nrows()).filter(|&i| mask.map_or(true, |mm| mm[(i, k)])).map(|i| a[(i, k)]).collect()
    };
    let vx = collect(x, mask_x);
    let vy = collect(y, mask_y);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&vx), mean(&vy));
    ColumnStats {
        nk: vx.len() as f64,
        mk: vy.len() as f64,
        mean_x: mx,
        mean_y: my,
        ss_x: vx.iter().map(|v| (v - mx).powi(2)).sum(),
        ss_y: vy.iter().map(|v| (v - my).powi(2)).sum(),
    }
}

/// Pooled component test: mean of squared per-column pooled t statistics
/// computed on observed entries (`true` in a mask = observed).
///
/// The null law c·χ²_d matches the first two null moments of the statistic:
/// E t_k² = ν_k/(ν_k−2) and var t_k² from the t law, plus 2ρ²_kl covariance
/// between columns, with Σρ²_kl estimated from the pooled within-group
/// correlations after first-order bias correction.
pub fn pct(s: &TwoSample, masks: Option<(&DMatrix<bool>, &DMatrix<bool>)>) -> Result<TestResult> {
    let (x, y) = (s.x.values(), s.y.values());
    let p = s.p();
    if let Some((mx, my)) = masks {
        if mx.shape() != x.shape() || my.shape() != y.shape() {
            return Err(Error::Dimension("missing-data masks must match the data shapes".into()));
        }
    }
    let (mx, my) = match masks {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let mut t2 = Vec::with_capacity(p);
    let mut mean_null = 0.0;
    let mut var_diag = 0.0;
    for k in 0..p {
        let c = column_stats(x, y, mx, my, k);
        if c.nk < 2.0 || c.mk < 2.0 {
            return Err(Error::TooSmall(format!("column {} has fewer than 2 observed values in a group", k + 1)));
        }
        let nu = c.nk + c.mk - 2.0;
        let sk = (c.ss_x + c.ss_y) / nu;
        if !(sk > 0.0) {
            return Err(Error::InvalidInput(format!("column {} has zero variance", k + 1)));
        }
        t2.push(c.nk * c.mk / (c.nk + c.mk) * (c.mean_x - c.mean_y).powi(2) / sk);
        if nu <= 4.0 {
            return Err(Error::TooSmall(format!(
                "column {}: moment matching needs more than 4 degrees of freedom",
                k + 1
            )));
        }
        mean_null += nu / (nu - 2.0);
        var_diag += 2.0 * nu * nu * (nu - 1.0) / ((nu - 2.0).powi(2) * (nu - 4.0));
    }
    let pf = p as f64;
    let stat = t2.iter().sum::<f64>() / pf;
    let off = if p > 1 { off_diagonal_rho2(x, y, mx, my) } else { 0.0 };
    let mean_null = mean_null / pf;
    let var_null = (var_diag + 2.0 * off.max(0.0)) / (pf * pf);
    let d = 2.0 * mean_null * mean_null / var_null;
    let c = mean_null / d;
    Ok(TestResult::new("pct", stat, chi2_sf(stat / c, d), NullDist::ScaledChiSquare { c, d })
        .with_diag("sum_offdiag_rho2", off))
}

/// Σ_{k≠l} ρ²_kl from pairwise-complete within-group residuals.
fn off_diagonal_rho2(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    mx: Option<&DMatrix<bool>>,
    my: Option<&DMatrix<bool>>,
) -> f64 {
    let p = x.ncols();
    let obs = |mask: Option<&DMatrix<bool>>, i: usize, k: usize| mask.map_or(true, |m| m[(i, k)]);
    let mut total = 0.0;
    for k in 0..p {
        for l in k + 1..p {
            let mut sxy = 0.0;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut dof = 0.0;
            for (a, mask) in [(x, mx), (y, my)] {
                let rows: Vec<usize> = (0..a.nrows()).filter(|&i| obs(mask, i, k) && obs(mask, i, l)).collect();
                if rows.len() < 2 {
                    continue;
                }
                let cnt = rows.len() as f64;
                let mk = rows.iter().map(|&i| a[(i, k)]).sum::<f64>() / cnt;
                let ml = rows.iter().map(|&i| a[(i, l)]).sum::<f64>() / cnt;
                for &i in &rows {
                    let (u, v) = (a[(i, k)] - mk, a[(i, l)] - ml);
                    sxy += u * v;
                    sxx += u * u;
                    syy += v * v;
                }
                dof += cnt - 1.0;
            }
            if sxx > 0.0 && syy > 0.0 && dof > 1.0 {
                let r2 = sxy * sxy / (sxx * syy);
                total += 2.0 * (r2 - (1.0 - r2).powi(2) / dof);
            }
        }
    }
    total
}

/// Uncorrected aggregate p⁻¹ Σ (X̄_k−Ȳ_k)²/(s²_Xk/n + s²_Yk/m). Not a calibrated test.
pub fn gct_aggregate(s: &TwoSample) -> Result<f64> {
    let (x, y) = (s.x.values(), s.y.values());
    let (n, m) = (s.n() as f64, s.m() as f64);
    let mut t = 0.0;
    for k in 0..s.p() {
        let c = column_stats(x, y, None, None, k);
        let v = c.ss_x / (n - 1.0) / n + c.ss_y / (m - 1.0) / m;
        if !(v > 0.0) {
            return Err(Error::InvalidInput(format!("column {} has zero variance", k + 1)));
        }
        t += (c.mean_x - c.mean_y).powi(2) / v;
    }
    Ok(t / s.p() as f64)
}

/// Precision estimate plugged into the max test.
#[derive(Debug, Clone, PartialEq)]
pub enum ClxPrecision {
    Identity,
    /// Inverse of the diagonal of the pooled covariance.
    DiagonalInverse,
    Matrix(DMatrix<f64>),
}

/// Max of squared standardized coordinates of Ω̂(X̄−Ȳ). The null law of
/// T − 2log p + log log p is type-I extreme value with CDF
/// exp(−π^{-1/2} e^{−x/2}); the test rejects above
/// 2log p − log log p − log π − 2 log log(1/(1−α)). With p = 1 the
/// statistic is a squared z-score and χ²₁ is used instead.
pub fn clx_max_test(s: &TwoSample, omega: &ClxPrecision, alpha: f64) -> Result<TestResult> {
    let (x, y) = (s.x.values(), s.y.values());
    let (n, m, p) = (s.n() as f64, s.m() as f64, s.p());
    let total = n + m;
    let transform = |a: &DMatrix<f64>, om: &DMatrix<f64>| a * om.transpose();
    let (tx, ty) = match omega {
        ClxPrecision::Identity => (x.clone(), y.clone()),
        ClxPrecision::DiagonalInverse => {
            let z = stacked_residuals(x, y);
            let mut om = DMatrix::zeros(p, p);
            for (k, c) in z.column_iter().enumerate() {
                let v = c.norm_squared() / (total - 2.0);
                if !(v > 0.0) {
                    return Err(Error::InvalidInput(format!("column {} has zero variance", k + 1)));
                }
                om[(k, k)] = 1.0 / v;
            }
            (transform(x, &om), transform(y, &om))
        }
        ClxPrecision::Matrix(om) => {
            if om.shape() != (p, p) {
                return Err(Error::Dimension(format!(
                    "precision estimate is {}x{}, expected {p}x{p}",
                    om.nrows(),
                    om.ncols()
                )));
            }
            (transform(x, om), transform(y, om))
        }
    };
    let d = column_means(&tx) - column_means(&ty);
    let zx = crate::linalg::center(&tx);
    let zy = crate::linalg::center(&ty);
    let mut stat = f64::NEG_INFINITY;
    for k in 0..p {
        // n·S_X,kk with S_X biased is the plain sum of squares
        let denom = (zx.column(k).norm_squared() + zy.column(k).norm_squared()) / total;
        if !(denom > 0.0) {
            return Err(Error::InvalidInput(format!("transformed column {} has zero variance", k + 1)));
        }
        stat = stat.max(d[k] * d[k] / denom);
    }
    stat *= n * m / total;
    let pf = p as f64;
    let mut res = if p == 1 {
        TestResult::new("clx", stat, chi2_sf(stat, 1.0), NullDist::ChiSquare { df: 1.0 })
    } else {
        let centered = stat - 2.0 * pf.ln() + pf.ln().ln();
        let cdf = (-(std::f64::consts::PI.sqrt().recip()) * (-centered / 2.0).exp()).exp();
        let threshold =
            2.0 * pf.ln() - pf.ln().ln() - std::f64::consts::PI.ln() - 2.0 * (1.0 / (1.0 - alpha)).ln().ln();
        let mut r = TestResult::new("clx", stat, 1.0 - cdf, NullDist::ExtremeValueI).with_diag("threshold", threshold);
        r.decision = Some(stat > threshold);
        r
    };
    if res.decision.is_none() {
        res.decision = Some(res.p_value < alpha);
    }
    Ok(res)
}
