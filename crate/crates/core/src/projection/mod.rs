//! Projected Hotelling statistics and random-projection tests.

mod generate;
mod raptt;

pub use generate::{generate_projection, ProjectionKind, ProjectionMatrix, ProjectionSpec};
pub use raptt::{default_k, raptt, raptt_cutoff, raptt_mean_pvalue, t2_random_projection, RapttConfig};

use crate::data::TwoSample;
use crate::error::{Error, Result};
use crate::linalg::{sample_mean, sym_eigen};
use crate::mean_iid::{hotelling_from_quadratic, stacked_residuals};
use crate::result::TestResult;
use nalgebra::DVector;

/// Eigenvalues of the pooled covariance at or below this fraction of the
/// largest are treated as zero (generalized inverse).
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Leading eigenpairs of pooled S expressed through the mean difference:
/// `coords[j] = v_jᵀ(X̄−Ȳ)` alongside `values[j] = λ_j`, positive part only.
struct Spectrum {
    values: Vec<f64>,
    coords: Vec<f64>,
}

fn pooled_spectrum(s: &TwoSample) -> Result<Spectrum> {
    let z = stacked_residuals(s.x.values(), s.y.values());
    let total = z.nrows();
    let div = total as f64 - 2.0;
    let d = sample_mean(&s.x) - sample_mean(&s.y);
    let (values, coords): (Vec<f64>, Vec<f64>) = if s.p() <= total {
        let eig = sym_eigen(&(z.tr_mul(&z) / div))?;
        let c = eig.vectors.tr_mul(&d);
        (eig.values.iter().copied().collect(), c.iter().copied().collect())
    } else {
        // dual side: v_j = Zᵀu_j / √(div·λ_j)
        let eig = sym_eigen(&(&z * z.transpose() / div))?;
        let zd: DVector<f64> = &z * &d;
        let c = eig.vectors.tr_mul(&zd);
        let vals: Vec<f64> = eig.values.iter().copied().collect();
        let coords =
            vals.iter().zip(c.iter()).map(|(l, c)| if *l > 0.0 { c / (div * l).sqrt() } else { 0.0 }).collect();
        (vals, coords)
    };
    let top = values.first().copied().unwrap_or(0.0);
    let keep = values.iter().take_while(|&&l| l > EIGEN_CUTOFF * top && l > 0.0).count();
    Ok(Spectrum { values: values[..keep].to_vec(), coords: coords[..keep].to_vec() })
}

/// One point of a k sweep.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScanPoint {
    pub k: usize,
    pub statistic: f64,
    pub p_value: f64,
}

fn check_k(k: usize, spec: &Spectrum, s: &TwoSample) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let limit = spec.values.len().min(s.n() + s.m() - 2);
    if k > limit {
        return Err(Error::Dimension(format!("k={k} exceeds the {limit} usable positive eigenvalues")));
    }
    Ok(())
}

/// Hotelling statistic on the data projected onto the top-k eigenvectors
/// of the pooled covariance, referred to F(k, n+m−k−1).
pub fn projected_hotelling(s: &TwoSample, k: usize) -> Result<TestResult> {
    let spec = pooled_spectrum(s)?;
    check_k(k, &spec, s)?;
    let quad: f64 = (0..k).map(|j| spec.coords[j].powi(2) / spec.values[j]).sum();
    let (t2, pv, nd) = hotelling_from_quadratic(s.n(), s.m(), k, quad);
    Ok(TestResult::new("projected-hotelling", t2, pv, nd).with_diag("k", k as f64))
}

/// p-value sweep over `ks`, sharing one eigendecomposition.
pub fn scan_k(s: &TwoSample, ks: &[usize]) -> Result<Vec<ScanPoint>> {
    let spec = pooled_spectrum(s)?;
    for &k in ks {
        check_k(k, &spec, s)?;
    }
    let mut cum = Vec::with_capacity(spec.values.len() + 1);
    cum.push(0.0);
    for (c, l) in spec.coords.iter().zip(&spec.values) {
        cum.push(cum.last().unwrap() + c * c / l);
    }
    Ok(ks
        .iter()
        .map(|&k| {
            let (statistic, p_value, _) = hotelling_from_quadratic(s.n(), s.m(), k, cum[k]);
            ScanPoint { k, statistic, p_value }
        })
        .collect())
}

/// Largest k accepted by [`scan_k`] for this sample.
pub fn max_scan_k(s: &TwoSample) -> Result<usize> {
    let spec = pooled_spectrum(s)?;
    Ok(spec.values.len().min(s.n() + s.m() - 2))
}

/// Smallest k in a sweep with p-value below `alpha`.
pub fn smallest_rejecting_k(scan: &[ScanPoint], alpha: f64) -> Option<usize> {
    scan.iter().filter(|pt| pt.p_value < alpha).map(|pt| pt.k).min()
}
