use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg::{log_det_spd, sample_covariance};
use crate::projection::{generate_projection, ProjectionKind, ProjectionSpec};
use crate::result::{NullDist, TestResult};
use crate::rng::RngStream;
use crate::special::{chi2_sf, normal_sf};
use nalgebra::DMatrix;

/// p⁻¹ tr{(S/(tr S/p) − I)²}.
pub fn u_functional(s: &DMatrix<f64>) -> Result<f64> {
    let p = s.nrows() as f64;
    let tr = s.trace();
    if !(tr > 0.0) {
        return Err(Error::InvalidInput("sphericity functional needs tr(S) > 0".into()));
    }
    let scaled = s * (p / tr) - DMatrix::identity(s.nrows(), s.ncols());
    Ok(scaled.norm_squared() / p)
}

/// p⁻¹ Σ (λ_k/λ̄ − 1)².
pub fn u_from_eigenvalues(lambda: &[f64]) -> f64 {
    let p = lambda.len() as f64;
    let bar = lambda.iter().sum::<f64>() / p;
    lambda.iter().map(|l| (l / bar - 1.0).powi(2)).sum::<f64>() / p
}

/// p⁻¹ tr{(S − I)²}.
pub fn v_functional(s: &DMatrix<f64>) -> f64 {
    (s - DMatrix::identity(s.nrows(), s.ncols())).norm_squared() / s.nrows() as f64
}

/// V − (p/n)(tr S/p)² + p/n.
pub fn w_functional(s: &DMatrix<f64>, n: usize) -> f64 {
    let p = s.nrows() as f64;
    let ratio = p / n as f64;
    v_functional(s) - ratio * (s.trace() / p).powi(2) + ratio
}

fn scaled_chi2(method: &str, functional: f64, n: usize, p: usize, df: f64) -> TestResult {
    let stat = n as f64 * p as f64 / 2.0 * functional;
    TestResult::new(method, stat, chi2_sf(stat, df), NullDist::ChiSquare { df }).with_diag("functional", functional)
}

fn cov_of(m: &DataMatrix) -> Result<DMatrix<f64>> {
    if m.n() < 2 {
        return Err(Error::TooSmall("covariance tests need n ≥ 2".into()));
    }
    Ok(sample_covariance(m, true))
}

/// (np/2)·U_n against χ² with p(p+1)/2 − 1 df.
pub fn sphericity_test_un(m: &DataMatrix) -> Result<TestResult> {
    let s = cov_of(m)?;
    let u = u_functional(&s).map_err(|_| Error::InvalidInput("sample covariance is zero".into()))?;
    let p = m.p() as f64;
    Ok(scaled_chi2("sphericity-u", u, m.n(), m.p(), p * (p + 1.0) / 2.0 - 1.0))
}

/// (np/2)·V_n against χ² with p(p+1)/2 df.
pub fn identity_test_vn(m: &DataMatrix) -> Result<TestResult> {
    let s = cov_of(m)?;
    let p = m.p() as f64;
    Ok(scaled_chi2("identity-v", v_functional(&s), m.n(), m.p(), p * (p + 1.0) / 2.0))
}

/// (np/2)·W_n against χ² with p(p+1)/2 df.
pub fn identity_test_wn(m: &DataMatrix) -> Result<TestResult> {
    let s = cov_of(m)?;
    let p = m.p() as f64;
    Ok(scaled_chi2("identity-w", w_functional(&s, m.n()), m.n(), m.p(), p * (p + 1.0) / 2.0))
}

/// Identity LRT L = tr S − log|S| − p (S unbiased, ν = n−1 dof) centered by
/// p[1 − (1 − ν/p) log(1 − p/ν)] and the limiting mean −½log(1−y), scaled
/// by √(−2[log(1−y) + y]), y = p/ν. Upper tail of N(0, 1).
pub fn identity_lrt_corrected(m: &DataMatrix) -> Result<TestResult> {
    let (n, p) = (m.n(), m.p());
    if p + 1 >= n {
        return Err(Error::Dimension(format!("corrected identity LRT needs p < n−1 (p={p}, n={n})")));
    }
    let s = sample_covariance(m, false);
    let (pf, nu) = (p as f64, (n - 1) as f64);
    let y = pf / nu;
    let l = s.trace() - log_det_spd(&s)? - pf;
    let center = pf * (1.0 - (1.0 - 1.0 / y) * (1.0 - y).ln());
    let mu = -0.5 * (1.0 - y).ln();
    let sd = (-2.0 * ((1.0 - y).ln() + y)).sqrt();
    let z = (l - center - mu) / sd;
    Ok(TestResult::new("identity-lrt-corrected", z, normal_sf(z), NullDist::StandardNormal).with_diag("lrt", l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureHypothesis {
    Sphericity,
    Identity,
}

/// Experimental: sphericity (U_n) or identity (W_n) test on rows mapped
/// through a Haar k × p matrix, which preserves both hypotheses.
pub fn projected_structure_test(
    m: &DataMatrix,
    k: usize,
    which: StructureHypothesis,
    stream: &RngStream,
) -> Result<TestResult> {
    if k == 0 || k > m.p() {
        return Err(Error::Dimension(format!("projection needs 1 ≤ k ≤ p (k={k}, p={})", m.p())));
    }
    let r = generate_projection(ProjectionSpec { kind: ProjectionKind::Haar, k, stream: *stream }, m.p())?;
    let projected = DataMatrix::new(m.values() * r.values.transpose())?;
    let mut res = match which {
        StructureHypothesis::Sphericity => sphericity_test_un(&projected)?,
        StructureHypothesis::Identity => identity_test_wn(&projected)?,
    };
    res.method = format!("projected-{}-experimental", res.method);
    Ok(res.with_diag("k", k as f64))
}
