use super::{stacked_residuals, trace_s_s2};
use crate::data::TwoSample;
use crate::error::{Error, Result};
use crate::linalg::column_means;
use crate::result::{NullDist, TestResult};
use crate::special::normal_sf;
use nalgebra::{DMatrix, DVector};

/// Estimates of tr(Σ₁²), tr(Σ₂²) and tr(Σ₁Σ₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimates {
    pub tr_s1_sq: f64,
    pub tr_s2_sq: f64,
    pub tr_s1_s2: f64,
}

pub fn bai_saranadasa(s: &TwoSample) -> Result<TestResult> {
    let (n, m) = (s.n() as f64, s.m() as f64);
    if s.n() + s.m() < 4 {
        return Err(Error::TooSmall("Bai-Saranadasa needs n+m >= 4".into()));
    }
    let total = n + m;
    let d = column_means(s.x.values()) - column_means(s.y.values());
    let z = stacked_residuals(s.x.values(), s.y.values());
    let (tr, tr2) = trace_s_s2(&z, total - 2.0);
    let scale = total / (n * m);
    let num = d.norm_squared() - scale * tr;
    let inner = tr2 - tr * tr / (total - 2.0);
    let var = 2.0 * (total - 1.0) * (total - 2.0) / (total * (total - 3.0)) * inner;
    if !(var > 0.0) {
        return Err(Error::Numerical("Bai-Saranadasa variance estimate is not positive".into()));
    }
    let stat = num / (scale * var.sqrt());
    Ok(TestResult::new("bai-saranadasa", stat, normal_sf(stat), NullDist::StandardNormal).with_diag("functional", num))
}

/// Leave-out terms for one group: a_ij = X_iᵀ(X_j − X̄₍ᵢ,ⱼ₎) from the Gram matrix.
fn one_group_trace(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let nf = n as f64;
    let row: Vec<f64> = (0..n).map(|i| g.row(i).sum()).collect();
    let a = |i: usize, j: usize| g[(i, j)] - (row[i] - g[(i, i)] - g[(i, j)]) / (nf - 2.0);
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a(i, j) * a(j, i);
            }
        }
    }
    acc / (nf * (nf - 1.0))
}

/// Leave-out U-statistic estimators of the three traces, on the data as given.
pub fn cq_trace_estimates(s: &TwoSample) -> Result<TraceEstimates> {
    s.require_sizes(3, "the leave-two-out trace estimators")?;
    let x = s.x.values();
    let y = s.y.values();
    let (n, m) = (s.n(), s.m());
    let gx = x * x.transpose();
    let gy = y * y.transpose();
    let h = x * y.transpose();
    let hr: Vec<f64> = (0..n).map(|i| h.row(i).sum()).collect();
    let hc: Vec<f64> = (0..m).map(|j| h.column(j).sum()).collect();
    let (nf, mf) = (n as f64, m as f64);
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..m {
            let hij = h[(i, j)];
            let b = hij - (hr[i] - hij) / (mf - 1.0);
            let c = hij - (hc[j] - hij) / (nf - 1.0);
            cross += b * c;
        }
    }
    Ok(TraceEstimates { tr_s1_sq: one_group_trace(&gx), tr_s2_sq: one_group_trace(&gy), tr_s1_s2: cross / (nf * mf) })
}

/// Unbiased U-statistic for ‖μ₁ − μ₂‖².
fn cq_functional(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let (n, m) = (x.nrows() as f64, y.nrows() as f64);
    let sx = x.row_sum();
    let sy = y.row_sum();
    let off = |sum: &nalgebra::RowDVector<f64>, a: &DMatrix<f64>| sum.norm_squared() - a.norm_squared();
    off(&sx, x) / (n * (n - 1.0)) + off(&sy, y) / (m * (m - 1.0)) - 2.0 * sx.dot(&sy) / (n * m)
}

pub fn chen_qin(s: &TwoSample) -> Result<TestResult> {
    s.require_sizes(3, "Chen-Qin")?;
    let (x, y) = s.grand_centered();
    let centered = TwoSample::from_matrices(x.clone(), y.clone())?;
    let tr = cq_trace_estimates(&centered)?;
    let (n, m) = (s.n() as f64, s.m() as f64);
    let tn = cq_functional(&x, &y);
    let var = 2.0 / (n * (n - 1.0)) * tr.tr_s1_sq + 2.0 / (m * (m - 1.0)) * tr.tr_s2_sq + 4.0 / (n * m) * tr.tr_s1_s2;
    if !(var > 0.0) {
        return Err(Error::Numerical(format!(
            "Chen-Qin variance estimate is not positive (tr1={:.4e}, tr2={:.4e}, tr12={:.4e})",
            tr.tr_s1_sq, tr.tr_s2_sq, tr.tr_s1_s2
        )));
    }
    let stat = tn / var.sqrt();
    Ok(TestResult::new("chen-qin", stat, normal_sf(stat), NullDist::StandardNormal)
        .with_diag("functional", tn)
        .with_diag("tr_s1_sq", tr.tr_s1_sq)
        .with_diag("tr_s2_sq", tr.tr_s2_sq)
        .with_diag("tr_s1_s2", tr.tr_s1_s2))
}

pub fn srivastava_du(s: &TwoSample, drop_correction: bool) -> Result<TestResult> {
    let (n, m, p) = (s.n() as f64, s.m() as f64, s.p());
    let total = n + m;
    let mut z = stacked_residuals(s.x.values(), s.y.values());
    let dof = total - 2.0;
    let diag: Vec<f64> = z.column_iter().map(|c| c.norm_squared() / dof).collect();
    if let Some(k) = diag.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(format!("column {} has zero variance", k + 1)));
    }
    let d = column_means(s.x.values()) - column_means(s.y.values());
    let w: f64 = d.iter().zip(&diag).map(|(dk, sk)| dk * dk / sk).sum();
    for (k, mut c) in z.column_iter_mut().enumerate() {
        c /= diag[k].sqrt();
    }
    let (_, tr_r2) = trace_s_s2(&z, dof);
    let pf = p as f64;
    let num = n * m / total * w - total * pf / dof;
    let c = if drop_correction { 1.0 } else { 1.0 + tr_r2 / pf.powf(1.5) };
    let var = 2.0 * (tr_r2 - pf * pf / dof) * c;
    if !(var > 0.0) {
        return Err(Error::Numerical("Srivastava-Du variance estimate is not positive".into()));
    }
    let stat = num / var.sqrt();
    Ok(TestResult::new("srivastava-du", stat, normal_sf(stat), NullDist::StandardNormal).with_diag("tr_r2", tr_r2))
}

/// Park-Ayyala functional and its three leave-out R-trace estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaParts {
    pub u_n: f64,
    pub tr_r1_sq: f64,
    pub tr_r2_sq: f64,
    pub tr_r1_r2: f64,
}

/// Leave-out quantities of one group: Σ_l x_l², column sums.
struct GroupSums {
    q: DVector<f64>,
    t: DVector<f64>,
}

impl GroupSums {
    fn new(a: &DMatrix<f64>) -> Self {
        let q = DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.norm_squared()));
        let t = a.row_sum().transpose();
        Self { q, t }
    }
}

/// Pair terms within one group. `other_ss` is (size−1)·S of the other group's
/// diagonal, already in sum-of-squares form.
fn pa_within(a: &DMatrix<f64>, other_ss: &DVector<f64>, total: f64) -> Result<(f64, f64)> {
    let n = a.nrows();
    let p = a.ncols();
    let nf = n as f64;
    let sums = GroupSums::new(a);
    let mut u = 0.0;
    let mut r = 0.0;
    let mut dinv = vec![0.0; p];
    for i in 0..n {
        for j in i + 1..n {
            let mut uij = 0.0;
            let mut left = 0.0;
            let mut right = 0.0;
            for k in 0..p {
                let (xi, xj) = (a[(i, k)], a[(j, k)]);
                let rest = sums.t[k] - xi - xj;
                let ss = sums.q[k] - xi * xi - xj * xj - rest * rest / (nf - 2.0);
                let dk = (ss + other_ss[k]) / (total - 4.0);
                if !(dk > 0.0) {
                    return Err(Error::Numerical(format!("leave-out variance of column {} is not positive", k + 1)));
                }
                dinv[k] = 1.0 / dk;
                let mean_out = rest / (nf - 2.0);
                uij += xi * xj * dinv[k];
                left += xi * dinv[k] * (xj - mean_out);
                right += xj * dinv[k] * (xi - mean_out);
            }
            u += 2.0 * uij;
            r += 2.0 * left * right;
        }
    }
    let norm = nf * (nf - 1.0);
    Ok((u / norm, r / norm))
}

/// Park-Ayyala pieces computed on the data as given.
pub fn park_ayyala_parts(s: &TwoSample) -> Result<PaParts> {
    s.require_sizes(5, "Park-Ayyala")?;
    let x = s.x.values();
    let y = s.y.values();
    let (n, m, p) = (s.n(), s.m(), s.p());
    let (nf, mf) = (n as f64, m as f64);
    let total = nf + mf;
    let sx = GroupSums::new(x);
    let sy = GroupSums::new(y);
    // (size−1)·S diagonals of the full groups
    let ssx = DVector::from_fn(p, |k, _| sx.q[k] - sx.t[k] * sx.t[k] / nf);
    let ssy = DVector::from_fn(p, |k, _| sy.q[k] - sy.t[k] * sy.t[k] / mf);
    let (ux, rx) = pa_within(x, &ssy, total)?;
    let (uy, ry) = pa_within(y, &ssx, total)?;

    // leave-one-out sums of squares, (size−2)·S_(i)
    let loo = |a: &DMatrix<f64>, g: &GroupSums, size: f64| {
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, k| {
            let v = a[(i, k)];
            let rest = g.t[k] - v;
            g.q[k] - v * v - rest * rest / (size - 1.0)
        })
    };
    let lx = loo(x, &sx, nf);
    let ly = loo(y, &sy, mf);
    let mut uxy = 0.0;
    let mut rxy = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mut uij = 0.0;
            let mut left = 0.0;
            let mut right = 0.0;
            for k in 0..p {
                let dk = (lx[(i, k)] + ly[(j, k)]) / (total - 4.0);
                if !(dk > 0.0) {
                    return Err(Error::Numerical(format!("leave-out variance of column {} is not positive", k + 1)));
                }
                let inv = 1.0 / dk;
                let (xi, yj) = (x[(i, k)], y[(j, k)]);
                let ybar_out = (sy.t[k] - yj) / (mf - 1.0);
                let xbar_out = (sx.t[k] - xi) / (nf - 1.0);
                uij += xi * yj * inv;
                left += xi * inv * (yj - ybar_out);
                right += yj * inv * (xi - xbar_out);
            }
            uxy += uij;
            rxy += left * right;
        }
    }
    let factor = (total - 6.0) / (total - 4.0);
    Ok(PaParts {
        u_n: factor * (ux + uy - 2.0 * uxy / (nf * mf)),
        tr_r1_sq: rx,
        tr_r2_sq: ry,
        tr_r1_r2: rxy / (nf * mf),
    })
}

pub fn park_ayyala(s: &TwoSample) -> Result<TestResult> {
    let (x, y) = s.grand_centered();
    let parts = park_ayyala_parts(&TwoSample::from_matrices(x, y)?)?;
    let (n, m) = (s.n() as f64, s.m() as f64);
    let factor = (n + m - 6.0) / (n + m - 4.0);
    let var = factor
        * factor
        * (2.0 / (n * (n - 1.0)) * parts.tr_r1_sq
            + 2.0 / (m * (m - 1.0)) * parts.tr_r2_sq
            + 4.0 / (n * m) * parts.tr_r1_r2);
    if !(var > 0.0) {
        return Err(Error::Numerical("Park-Ayyala variance estimate is not positive".into()));
    }
    let stat = parts.u_n / var.sqrt();
    Ok(TestResult::new("park-ayyala", stat, normal_sf(stat), NullDist::StandardNormal)
        .with_diag("functional", parts.u_n)
        .with_diag("tr_r1_sq", parts.tr_r1_sq)
        .with_diag("tr_r2_sq", parts.tr_r2_sq)
        .with_diag("tr_r1_r2", parts.tr_r1_r2))
}
