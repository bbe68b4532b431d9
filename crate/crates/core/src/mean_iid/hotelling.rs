use crate::data::TwoSample;
use crate::error::{Error, Result};
use crate::linalg::{pooled_covariance, spd_quad_form, sym_eigen};
use crate::result::{NullDist, TestResult};
use crate::special::f_sf;

/// Scaled statistic (N−k−1)/((N−2)k)·nm/N·q from a quadratic form q in k
/// dimensions, with its F(k, N−k−1) p-value.
pub fn hotelling_from_quadratic(n: usize, m: usize, k: usize, quad: f64) -> (f64, f64, NullDist) {
    let total = (n + m) as f64;
    let k_f = k as f64;
    let d2 = total - k_f - 1.0;
    let t2 = d2 / ((total - 2.0) * k_f) * (n * m) as f64 / total * quad;
    (t2, f_sf(t2, k_f, d2), NullDist::F { d1: k_f, d2 })
}

pub fn hotelling_t2(s: &TwoSample) -> Result<TestResult> {
    let (n, m, p) = (s.n(), s.m(), s.p());
    if p + 1 >= n + m {
        return Err(Error::Dimension(format!("Hotelling needs p < n+m-1 (p={p}, n+m={})", n + m)));
    }
    let cov = pooled_covariance(s, false);
    let eig = sym_eigen(&cov)?;
    let min = eig.values[p - 1];
    if min <= 1e-12 * cov.trace() / p as f64 {
        return Err(Error::Singular(format!("pooled covariance is singular (min eigenvalue {min:.3e})")));
    }
    let d = crate::linalg::sample_mean(&s.x) - crate::linalg::sample_mean(&s.y);
    let quad = spd_quad_form(&cov, &d)?;
    let (t2, pv, nd) = hotelling_from_quadratic(n, m, p, quad);
    Ok(TestResult::new("hotelling", t2, pv, nd))
}
