use crate::data::{DataMatrix, TwoSample};
use crate::error::{Error, Result};
use crate::linalg::{center, log_det_spd, sample_covariance};
use crate::perm::{permutation_pvalue, shuffled_indices};
use crate::result::{NullDist, TestResult};
use crate::rng::RngStream;
use crate::special::{chi2_sf, normal_sf};
use nalgebra::DMatrix;

fn check_groups(groups: &[DataMatrix], min_n: usize) -> Result<usize> {
    if groups.len() < 2 {
        return Err(Error::InvalidInput("need at least two groups".into()));
    }
    let p = groups[0].p();
    for (g, m) in groups.iter().enumerate() {
        if m.p() != p {
            return Err(Error::Dimension(format!("group {} has p={}, expected {p}", g + 1, m.p())));
        }
        if m.n() < min_n {
            return Err(Error::TooSmall(format!("group {} has {} rows, need at least {min_n}", g + 1, m.n())));
        }
    }
    Ok(p)
}

/// Σ_g n_g (log|S_pl| − log|S_g|) with divisor-n covariances and
/// S_pl = Σ n_g S_g / Σ n_g; χ² with (K−1)p(p+1)/2 df.
pub fn equality_lrt(groups: &[DataMatrix]) -> Result<TestResult> {
    let p = check_groups(groups, 2)?;
    let total: usize = groups.iter().map(DataMatrix::n).sum();
    let mut pooled = DMatrix::zeros(p, p);
    let mut parts = Vec::with_capacity(groups.len());
    for (g, m) in groups.iter().enumerate() {
        let s = sample_covariance(m, true);
        let singular = || Error::Singular(format!("covariance of group {} is singular (p={p}, n={})", g + 1, m.n()));
        if p >= m.n() {
            return Err(singular());
        }
        let ld = log_det_spd(&s).map_err(|_| singular())?;
        pooled += &s * m.n() as f64;
        parts.push((m.n() as f64, ld));
    }
    pooled /= total as f64;
    let ld_pool = log_det_spd(&pooled)?;
    let stat: f64 = parts.iter().map(|(n, ld)| n * (ld_pool - ld)).sum();
    let pf = p as f64;
    let df = (groups.len() - 1) as f64 * pf * (pf + 1.0) / 2.0;
    Ok(TestResult::new("equality-lrt", stat, chi2_sf(stat, df), NullDist::ChiSquare { df }))
}

/// Wilks-type log Λ for K groups with ν_g = n_g − 1 dof and A_g the
/// centered cross-product matrices, standardized by its high-dimensional
/// mean and variance (valid while p < ν_g for every group). Small log Λ is
/// evidence against equality; the reported statistic is −Z, upper tail.
pub fn equality_lrt_corrected(groups: &[DataMatrix]) -> Result<TestResult> {
    let p = check_groups(groups, 2)?;
    let k = groups.len() as f64;
    let pf = p as f64;
    let total: f64 = groups.iter().map(|m| m.n() as f64).sum();
    let nu = total - k;
    let mut pooled = DMatrix::zeros(p, p);
    let mut log_lambda = pf * nu / 2.0 * nu.ln();
    let mut mu = nu * (2.0 * total - 2.0 * pf - 2.0 * k - 1.0) * (1.0 - pf / nu).ln();
    let mut var = (1.0 - pf / nu).ln();
    for (g, m) in groups.iter().enumerate() {
        let ng = m.n() as f64;
        let nug = ng - 1.0;
        if pf >= nug {
            return Err(Error::Dimension(format!("group {} needs p < n−1 (p={p}, n={})", g + 1, m.n())));
        }
        let c = center(m.values());
        let a = c.tr_mul(&c);
        let ld = log_det_spd(&a).map_err(|_| Error::Singular(format!("covariance of group {} is singular", g + 1)))?;
        log_lambda += nug / 2.0 * ld - pf * nug / 2.0 * nug.ln();
        pooled += a;
        mu -= nug * (2.0 * ng - 2.0 * pf - 3.0) * (1.0 - pf / nug).ln();
        var -= (nug / nu).powi(2) * (1.0 - pf / nug).ln();
    }
    log_lambda -= nu / 2.0 * log_det_spd(&pooled)?;
    let (mu, var) = (mu / 4.0, var / 2.0);
    if !(var > 0.0) {
        return Err(Error::Numerical("non-positive variance in corrected LRT".into()));
    }
    let z = (log_lambda - mu) / (nu * var.sqrt());
    Ok(TestResult::new("equality-lrt-corrected", -z, normal_sf(-z), NullDist::StandardNormal)
        .with_diag("log_lambda", log_lambda))
}

/// B − row means − column means + grand mean.
fn double_center(b: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = (b.nrows(), b.ncols());
    let rm: Vec<f64> = (0..r).map(|i| b.row(i).sum() / c as f64).collect();
    let cm: Vec<f64> = (0..c).map(|j| b.column(j).sum() / r as f64).collect();
    let g = b.sum() / (r * c) as f64;
    DMatrix::from_fn(r, c, |i, j| b[(i, j)] - rm[i] - cm[j] + g)
}

fn block(k: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| k[(rows[i], cols[j])])
}

/// Schott's F_n from the Gram matrix of pooled rows and a group partition.
fn schott_from_gram(k: &DMatrix<f64>, parts: &[Vec<usize>]) -> f64 {
    let kk = parts.len();
    let blocks: Vec<DMatrix<f64>> = parts.iter().map(|idx| double_center(&block(k, idx, idx))).collect();
    let nu: Vec<f64> = parts.iter().map(|idx| idx.len() as f64 - 1.0).collect();
    let tr: Vec<f64> = blocks.iter().zip(&nu).map(|(b, n)| b.trace() / n).collect();
    let tr2: Vec<f64> = blocks.iter().zip(&nu).map(|(b, n)| b.norm_squared() / (n * n)).collect();
    let mut first = 0.0;
    for i in 0..kk {
        for j in i + 1..kk {
            let cross = double_center(&block(k, &parts[i], &parts[j])).norm_squared() / (nu[i] * nu[j]);
            first += tr2[i] + tr2[j] - 2.0 * cross;
        }
    }
    let correction: f64 = (0..kk)
        .map(|i| {
            let n = nu[i];
            let eta = (n + 2.0) * (n - 1.0);
            (n * (n - 2.0) * tr2[i] + n * n * tr[i] * tr[i]) / (n * eta)
        })
        .sum();
    first - (kk as f64 - 1.0) * correction
}

/// Σ_{i<j} tr{(S_i − S_j)²} − (K−1) Σ_i [n_i(n_i−2) tr S_i² + n_i² (tr S_i)²]/(n_i η_i),
/// η_i = (n_i+2)(n_i−1), with n_i = rows − 1 and unbiased S_i. Mean zero
/// under equal Gaussian covariances.
pub fn schott_fn(groups: &[DataMatrix]) -> Result<f64> {
    check_groups(groups, 3)?;
    let covs: Vec<DMatrix<f64>> = groups.iter().map(|m| sample_covariance(m, false)).collect();
    let kk = covs.len();
    let mut first = 0.0;
    for i in 0..kk {
        for j in i + 1..kk {
            first += (&covs[i] - &covs[j]).norm_squared();
        }
    }
    let correction: f64 = covs
        .iter()
        .zip(groups)
        .map(|(s, m)| {
            let n = m.n() as f64 - 1.0;
            let eta = (n + 2.0) * (n - 1.0);
            (n * (n - 2.0) * s.norm_squared() + n * n * s.trace().powi(2)) / (n * eta)
        })
        .sum();
    Ok(first - (kk as f64 - 1.0) * correction)
}

/// Rows of all groups after removing each group's mean, their Gram matrix,
/// and the original partition.
fn pooled_gram(groups: &[&DMatrix<f64>]) -> (DMatrix<f64>, Vec<Vec<usize>>) {
    let total: usize = groups.iter().map(|g| g.nrows()).sum();
    let p = groups[0].ncols();
    let mut z = DMatrix::zeros(total, p);
    let mut parts = Vec::new();
    let mut start = 0;
    for g in groups {
        z.rows_mut(start, g.nrows()).copy_from(&center(g));
        parts.push((start..start + g.nrows()).collect());
        start += g.nrows();
    }
    (&z * z.transpose(), parts)
}

fn relabel(parts: &[Vec<usize>], perm: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(parts.len());
    let mut start = 0;
    for p in parts {
        out.push(perm[start..start + p.len()].to_vec());
        start += p.len();
    }
    out
}

/// Schott's F_n calibrated by permuting group labels of the group-centered rows.
pub fn schott_test(groups: &[DataMatrix], permutations: usize, stream: &RngStream) -> Result<TestResult> {
    check_groups(groups, 3)?;
    let mats: Vec<&DMatrix<f64>> = groups.iter().map(DataMatrix::values).collect();
    let (k, parts) = pooled_gram(&mats);
    let observed = schott_from_gram(&k, &parts);
    let total = k.nrows();
    let pv = permutation_pvalue(observed, permutations, stream, |rng| {
        schott_from_gram(&k, &relabel(&parts, &shuffled_indices(total, rng)))
    });
    Ok(TestResult::new("schott", observed, pv, NullDist::Permutation { count: permutations }))
}

/// Unbiased U-statistic pieces: `a1` ≈ tr Σ₁², `a2` ≈ tr Σ₂², `c` ≈ tr Σ₁Σ₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiChenParts {
    pub a1: f64,
    pub a2: f64,
    pub c: f64,
}

impl LiChenParts {
    pub fn functional(&self) -> f64 {
        self.a1 + self.a2 - 2.0 * self.c
    }
}

/// Σ*(X_iᵀX_j)²/P₂ − 2Σ*X_iᵀX_j X_jᵀX_k/P₃ + Σ*X_iᵀX_j X_kᵀX_l/P₄ over
/// distinct ordered indices, from the Gram matrix.
fn lc_within(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows() as f64;
    let mut g0 = g.clone();
    g0.fill_diagonal(0.0);
    let s2 = g0.norm_squared();
    let r: Vec<f64> = g0.row_iter().map(|row| row.sum()).collect();
    let s3 = r.iter().map(|v| v * v).sum::<f64>() - s2;
    let s = r.iter().sum::<f64>();
    let s4 = s * s - 2.0 * s2 - 4.0 * s3;
    let p2 = n * (n - 1.0);
    let p3 = p2 * (n - 2.0);
    let p4 = p3 * (n - 3.0);
    s2 / p2 - 2.0 * s3 / p3 + s4 / p4
}

fn lc_cross(h: &DMatrix<f64>) -> f64 {
    let (n, m) = (h.nrows() as f64, h.ncols() as f64);
    let q2 = h.norm_squared();
    let r2: f64 = h.row_iter().map(|r| r.sum().powi(2)).sum();
    let c2: f64 = h.column_iter().map(|c| c.sum().powi(2)).sum();
    let s = h.sum();
    q2 / (n * m) - (c2 - q2) / (n * (n - 1.0) * m) - (r2 - q2) / (n * m * (m - 1.0))
        + (s * s - c2 - r2 + q2) / (n * (n - 1.0) * m * (m - 1.0))
}

fn check_li_chen(s: &TwoSample) -> Result<()> {
    s.require_sizes(4, "Li-Chen statistic")
}

pub fn li_chen_parts(s: &TwoSample) -> Result<LiChenParts> {
    check_li_chen(s)?;
    let (x, y) = (s.x.values(), s.y.values());
    Ok(LiChenParts {
        a1: lc_within(&(x * x.transpose())),
        a2: lc_within(&(y * y.transpose())),
        c: lc_cross(&(x * y.transpose())),
    })
}

/// Unbiased estimate of tr{(Σ₁ − Σ₂)²}; location invariant.
pub fn li_chen_functional(s: &TwoSample) -> Result<f64> {
    Ok(li_chen_parts(s)?.functional())
}

fn lc_from_gram(k: &DMatrix<f64>, parts: &[Vec<usize>]) -> f64 {
    let (i, j) = (&parts[0], &parts[1]);
    lc_within(&block(k, i, i)) + lc_within(&block(k, j, j)) - 2.0 * lc_cross(&block(k, i, j))
}

/// Li-Chen functional calibrated by permuting labels of group-centered rows.
pub fn li_chen_test(s: &TwoSample, permutations: usize, stream: &RngStream) -> Result<TestResult> {
    check_li_chen(s)?;
    let (k, parts) = pooled_gram(&[s.x.values(), s.y.values()]);
    let observed = lc_from_gram(&k, &parts);
    let total = k.nrows();
    let pv = permutation_pvalue(observed, permutations, stream, |rng| {
        lc_from_gram(&k, &relabel(&parts, &shuffled_indices(total, rng)))
    });
    Ok(TestResult::new("li-chen", observed, pv, NullDist::Permutation { count: permutations }))
}
