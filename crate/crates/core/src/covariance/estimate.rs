use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg::{log_det_spd, sample_covariance, spd_inverse, trace_product};
use crate::perm::shuffled_indices;
use crate::rng::RngStream;
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Keeps entries with |i − j| < k.
pub fn band(s: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| if i.abs_diff(j) < k { s[(i, j)] } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandedEstimate {
    pub matrix: DMatrix<f64>,
    pub band_width: usize,
    /// Mean held-out squared Frobenius risk per candidate.
    pub cv_risk_curve: Vec<(usize, f64)>,
}

/// Banded covariance with the width chosen by K-fold cross validation:
/// risk is ‖band(S_train, k) − S_test‖²_F averaged over folds.
pub fn banded_covariance(
    m: &DataMatrix,
    k_candidates: &[usize],
    folds: usize,
    stream: &RngStream,
) -> Result<BandedEstimate> {
    let (n, p) = (m.n(), m.p());
    if folds < 2 {
        return Err(Error::InvalidInput("cross validation needs at least 2 folds".into()));
    }
    if n < 2 * folds {
        return Err(Error::TooSmall(format!("need n ≥ 2·folds (n={n}, folds={folds})")));
    }
    if k_candidates.is_empty() || k_candidates.iter().any(|&k| k == 0 || k > p) {
        return Err(Error::InvalidInput(format!("band widths must lie in 1..={p}")));
    }
    let order = shuffled_indices(n, &mut stream.rng());
    let values = m.values();
    let subset = |idx: &[usize]| DataMatrix::new(values.select_rows(idx)).map(|d| sample_covariance(&d, true));
    let risks: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                order.iter().enumerate().fold((vec![], vec![]), |mut acc, (pos, &i)| {
                    if pos % folds == f {
                        acc.0.push(i);
                    } else {
                        acc.1.push(i);
                    }
                    acc
                });
            let s_train = subset(&train)?;
            let s_test = subset(&test)?;
            Ok(k_candidates.iter().map(|&k| (band(&s_train, k) - &s_test).norm_squared()).collect())
        })
        .collect::<Result<_>>()?;
    let curve: Vec<(usize, f64)> = k_candidates
        .iter()
        .enumerate()
        .map(|(c, &k)| (k, risks.iter().map(|r| r[c]).sum::<f64>() / folds as f64))
        .collect();
    let best = curve.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))).map(|(k, _)| k).unwrap();
    Ok(BandedEstimate { matrix: band(&sample_covariance(m, true), best), band_width: best, cv_risk_curve: curve })
}

/// −(n/2)[log|Σ| + tr(SΣ⁻¹)], S with divisor n. Maximized at Σ = S.
pub fn gaussian_loglik_cov(sigma: &DMatrix<f64>, m: &DataMatrix) -> Result<f64> {
    check_square(sigma, m.p())?;
    let s = sample_covariance(m, true);
    let inv = spd_inverse(sigma)?;
    Ok(-(m.n() as f64) / 2.0 * (log_det_spd(sigma)? + trace_product(&s, &inv)))
}

/// (n/2)[log|Ω| − tr(SΩ)], the same likelihood in the precision matrix.
pub fn gaussian_loglik_prec(omega: &DMatrix<f64>, m: &DataMatrix) -> Result<f64> {
    check_square(omega, m.p())?;
    let s = sample_covariance(m, true);
    Ok(m.n() as f64 / 2.0 * (log_det_spd(omega)? - trace_product(&s, omega)))
}

fn check_square(a: &DMatrix<f64>, p: usize) -> Result<()> {
    if a.nrows() != p || a.ncols() != p {
        return Err(Error::Dimension(format!("expected a {p}×{p} matrix, got {}×{}", a.nrows(), a.ncols())));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySpec {
    /// λ Σ w_ij |a_ij| on one matrix.
    Lasso { lambda: f64, weights: DMatrix<f64> },
    /// λ₁ Σ_k Σ_{i≠j} |ω⁽ᵏ⁾_ij| + λ₂ Σ_{k<l} Σ_{i≠j} |ω⁽ᵏ⁾_ij − ω⁽ˡ⁾_ij|.
    Fused { lambda1: f64, lambda2: f64 },
    /// λ₁ Σ_k Σ_{i≠j} |ω⁽ᵏ⁾_ij| + λ₂ Σ_{i≠j} (Σ_k ω⁽ᵏ⁾²_ij)^{1/2}.
    Group { lambda1: f64, lambda2: f64 },
    /// Matrices are [Θ, Γ⁽¹⁾, …, Γ⁽ᴷ⁾] with Ω⁽ᵏ⁾ = Θ ∘ Γ⁽ᵏ⁾;
    /// λ₁ Σ_{i≠j} |θ_ij| + λ₂ Σ_{i≠j} Σ_k |γ⁽ᵏ⁾_ij|.
    Guo { lambda1: f64, lambda2: f64 },
}

impl PenaltySpec {
    /// Lasso with unit weights off the diagonal.
    pub fn off_diagonal_lasso(lambda: f64, p: usize) -> Self {
        PenaltySpec::Lasso { lambda, weights: DMatrix::from_fn(p, p, |i, j| f64::from(i != j)) }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            PenaltySpec::Lasso { lambda, weights } => *lambda >= 0.0 && weights.iter().all(|w| *w >= 0.0),
            PenaltySpec::Fused { lambda1, lambda2 }
            | PenaltySpec::Group { lambda1, lambda2 }
            | PenaltySpec::Guo { lambda1, lambda2 } => *lambda1 >= 0.0 && *lambda2 >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("penalty parameters and weights must be nonnegative".into()))
        }
    }
}

fn off_diag_abs(a: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if i != j {
                s += a[(i, j)].abs();
            }
        }
    }
    s
}

pub fn penalty_value(spec: &PenaltySpec, mats: &[DMatrix<f64>]) -> Result<f64> {
    spec.validate()?;
    let p = mats.first().map(|m| m.nrows()).unwrap_or(0);
    for m in mats {
        check_square(m, p)?;
    }
    let joint_min = if matches!(spec, PenaltySpec::Guo { .. }) { 3 } else { 2 };
    match spec {
        PenaltySpec::Lasso { lambda, weights } => {
            if mats.len() != 1 {
                return Err(Error::InvalidInput("lasso penalty takes exactly one matrix".into()));
            }
            check_square(weights, p)?;
            Ok(lambda * weights.component_mul(&mats[0].abs()).sum())
        }
        _ if mats.len() < joint_min => Err(Error::InvalidInput("joint penalties need at least K = 2 groups".into())),
        PenaltySpec::Fused { lambda1, lambda2 } => {
            let first: f64 = mats.iter().map(off_diag_abs).sum();
            let mut second = 0.0;
            for a in 0..mats.len() {
                for b in a + 1..mats.len() {
                    second += off_diag_abs(&(&mats[a] - &mats[b]));
                }
            }
            Ok(lambda1 * first + lambda2 * second)
        }
        PenaltySpec::Group { lambda1, lambda2 } => {
            let first: f64 = mats.iter().map(off_diag_abs).sum();
            let mut second = 0.0;
            for j in 0..p {
                for i in 0..p {
                    if i != j {
                        second += mats.iter().map(|m| m[(i, j)].powi(2)).sum::<f64>().sqrt();
                    }
                }
            }
            Ok(lambda1 * first + lambda2 * second)
        }
        PenaltySpec::Guo { lambda1, lambda2 } => {
            Ok(lambda1 * off_diag_abs(&mats[0]) + lambda2 * mats[1..].iter().map(off_diag_abs).sum::<f64>())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyTarget {
    Covariance,
    Precision,
}

/// Log-likelihood minus penalty. Lasso takes one matrix and one sample in
/// either parameterization; joint penalties take precision matrices (or
/// Guo's factors) and one sample per group.
pub fn penalized_objective(
    params: &[DMatrix<f64>],
    data: &[DataMatrix],
    spec: &PenaltySpec,
    target: PenaltyTarget,
) -> Result<f64> {
    let pen = penalty_value(spec, params)?;
    let loglik = match (spec, target) {
        (PenaltySpec::Lasso { .. }, PenaltyTarget::Covariance) => {
            single(data)?;
            gaussian_loglik_cov(&params[0], &data[0])?
        }
        (PenaltySpec::Lasso { .. }, PenaltyTarget::Precision) => {
            single(data)?;
            gaussian_loglik_prec(&params[0], &data[0])?
        }
        (_, PenaltyTarget::Covariance) => {
            return Err(Error::InvalidInput("joint penalties apply to precision matrices".into()));
        }
        (PenaltySpec::Guo { .. }, PenaltyTarget::Precision) => {
            let theta = &params[0];
            groups(data, params.len() - 1)?;
            params[1..]
                .iter()
                .zip(data)
                .map(|(g, d)| gaussian_loglik_prec(&theta.component_mul(g), d))
                .sum::<Result<f64>>()?
        }
        (_, PenaltyTarget::Precision) => {
            groups(data, params.len())?;
            params.iter().zip(data).map(|(o, d)| gaussian_loglik_prec(o, d)).sum::<Result<f64>>()?
        }
    };
    Ok(loglik - pen)
}

fn single(data: &[DataMatrix]) -> Result<()> {
    groups(data, 1)
}

fn groups(data: &[DataMatrix], k: usize) -> Result<()> {
    if data.len() != k {
        return Err(Error::InvalidInput(format!("expected {k} samples, got {}", data.len())));
    }
    Ok(())
}
