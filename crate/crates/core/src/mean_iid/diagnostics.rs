use super::stacked_residuals;
use crate::data::TwoSample;
use crate::linalg::sym_eigen;
use nalgebra::DMatrix;

/// Spectral summaries of a covariance-like matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRatios {
    /// λ_max / √tr(A²)
    pub lambda_max_ratio: f64,
    /// tr(A⁴) / tr²(A²)
    pub fourth_moment_ratio: f64,
    /// tr(A⁴) / p
    pub tr4_over_p: f64,
    pub lambda_max: f64,
}

fn ratios_from_eigs(eigs: &[f64], p: usize) -> SpectralRatios {
    let tr2: f64 = eigs.iter().map(|l| l * l).sum();
    let tr4: f64 = eigs.iter().map(|l| l.powi(4)).sum();
    let lmax = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    SpectralRatios {
        lambda_max_ratio: lmax / tr2.sqrt(),
        fourth_moment_ratio: tr4 / (tr2 * tr2),
        tr4_over_p: tr4 / p as f64,
        lambda_max: lmax,
    }
}

/// Ratios for an explicit symmetric matrix.
pub fn spectral_ratios(a: &DMatrix<f64>) -> crate::Result<SpectralRatios> {
    let e = sym_eigen(a)?;
    Ok(ratios_from_eigs(e.values.as_slice(), a.nrows()))
}

/// Nonzero spectrum of ZᵀZ/div through the smaller Gram side.
fn gram_eigs(z: &DMatrix<f64>, div: f64) -> Vec<f64> {
    let g = if z.ncols() <= z.nrows() { z.tr_mul(z) } else { z * z.transpose() };
    sym_eigen(&(g / div)).map(|e| e.values.iter().cloned().collect()).unwrap_or_default()
}

/// Descriptive ratios behind the strength-of-covariance conditions of the
/// asymptotic tests, evaluated on the pooled S and its correlation matrix R.
pub fn assumption_diagnostics(s: &TwoSample) -> Vec<(String, f64)> {
    let (n, m, p) = (s.n() as f64, s.m() as f64, s.p());
    let dof = n + m - 2.0;
    let mut z = stacked_residuals(s.x.values(), s.y.values());
    let sr = ratios_from_eigs(&gram_eigs(&z, dof), p);
    for mut c in z.column_iter_mut() {
        let sd = (c.norm_squared() / dof).sqrt();
        if sd > 0.0 {
            c /= sd;
        }
    }
    let rr = ratios_from_eigs(&gram_eigs(&z, dof), p);
    vec![
        ("lambda_max_over_sqrt_tr_s2".into(), sr.lambda_max_ratio),
        ("tr_s4_over_tr2_s2".into(), sr.fourth_moment_ratio),
        ("tr_r4_over_tr2_r2".into(), rr.fourth_moment_ratio),
        ("tr_r4_over_p".into(), rr.tr4_over_p),
        ("lambda_max_r_over_sqrt_p".into(), rr.lambda_max / (p as f64).sqrt()),
        ("p_over_n".into(), p as f64 / n),
        ("n_over_n_plus_m".into(), n / (n + m)),
    ]
}
