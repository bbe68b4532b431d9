//! Dense linear-algebra helpers shared by every module.

use crate::data::{DataMatrix, TwoSample};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Eigenpairs of a symmetric matrix, values descending, vectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with a deterministic ordering: eigenvalues
/// descending, ties kept in solver order, each eigenvector signed so its
/// largest-magnitude entry is positive.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("eigen input is {}x{}", a.nrows(), a.ncols())));
    }
    let norm = a.norm();
    let asym = (a - a.transpose()).norm();
    if asym > 1e-10 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput(format!("matrix not symmetric (asymmetry {asym:.3e})")));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let p = a.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values = DVector::from_iterator(p, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(p, p);
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let lead = v.iter().cloned().fold((0.0f64, 0.0f64), |(best, sgn), x| {
            if x.abs() > best + 1e-14 {
                (x.abs(), x.signum())
            } else {
                (best, sgn)
            }
        });
        if lead.1 < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(c, &v);
    }
    Ok(SymEigen { values, vectors })
}

pub fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_mean().transpose()
}

pub fn sample_mean(m: &DataMatrix) -> DVector<f64> {
    column_means(m.values())
}

/// Rows minus the column means.
pub fn center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = m.row_mean();
    let mut c = m.clone();
    for mut r in c.row_iter_mut() {
        r -= &mean;
    }
    c
}

/// Sample covariance with divisor n (biased) or n−1.
pub fn sample_covariance(m: &DataMatrix, biased: bool) -> DMatrix<f64> {
    let n = m.n();
    let z = center(m.values());
    let div = if biased { n as f64 } else { (n as f64 - 1.0).max(1.0) };
    z.tr_mul(&z) / div
}

/// Pooled covariance with divisor n+m−2, or n+m when `biased`.
pub fn pooled_covariance(s: &TwoSample, biased: bool) -> DMatrix<f64> {
    let zx = center(s.x.values());
    let zy = center(s.y.values());
    let total = (s.n() + s.m()) as f64;
    let div = if biased { total } else { total - 2.0 };
    (zx.tr_mul(&zx) + zy.tr_mul(&zy)) / div
}

/// tr(AB) without forming the product.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

/// Log-determinant of a symmetric positive definite matrix.
pub fn log_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    let ch = a.clone().cholesky().ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ch = a.clone().cholesky().ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(ch.inverse())
}

/// Quadratic form vᵀA⁻¹v for SPD A.
pub fn spd_quad_form(a: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    let ch = a.clone().cholesky().ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    let w = ch.l().solve_lower_triangular(v).expect("triangular solve");
    Ok(w.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand_distr::{Distribution, StandardNormal};

    fn random_sym(p: usize, seed: u64) -> DMatrix<f64> {
        let mut r = RngStream::new(seed, 0).rng();
        let a = DMatrix::from_fn(p, p, |_, _| StandardNormal.sample(&mut r));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn eigen_identity_and_diag() {
        let e = sym_eigen(&DMatrix::identity(4, 4)).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let e = sym_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 1.0]);
        assert!((e.vectors[(1, 0)] - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstruction_and_orthonormality() {
        let a = random_sym(20, 3);
        let e = sym_eigen(&a).unwrap();
        let rec = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!((rec - &a).norm() <= 1e-8 * a.norm());
        let orth = e.vectors.transpose() * &e.vectors - DMatrix::identity(20, 20);
        assert!(orth.abs().max() < 1e-9);
        assert!((e.values.sum() - a.trace()).abs() < 1e-9 * a.norm());
        assert!(e.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
        for c in e.vectors.column_iter() {
            let big = c.iter().cloned().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let mut a = DMatrix::identity(3, 3);
        a[(0, 1)] = 0.5;
        assert!(matches!(sym_eigen(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pooled_covariance_examples() {
        let x = DataMatrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let y = DataMatrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let s = TwoSample::new(x, y).unwrap();
        // SS = 2 + 2 over each divisor
        assert!((pooled_covariance(&s, false)[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((pooled_covariance(&s, true)[(0, 0)] - 1.0).abs() < 1e-15);
        let same = DMatrix::from_element(3, 4, 2.5);
        let s = TwoSample::from_matrices(same.clone(), same).unwrap();
        assert_eq!(pooled_covariance(&s, false).max(), 0.0);
    }

    #[test]
    fn pooled_covariance_rank_and_psd() {
        let mut r = RngStream::new(9, 0).rng();
        let x = DMatrix::from_fn(4, 10, |_, _| StandardNormal.sample(&mut r));
        let y = DMatrix::from_fn(5, 10, |_, _| StandardNormal.sample(&mut r));
        let s = TwoSample::from_matrices(x, y).unwrap();
        let cov = pooled_covariance(&s, false);
        let e = sym_eigen(&cov).unwrap();
        let tol = 1e-9 * cov.trace();
        assert!(e.values.min() >= -tol);
        let rank = e.values.iter().filter(|v| **v > tol).count();
        assert_eq!(rank, 7); // min(p, n+m-2)
    }

    #[test]
    fn mean_examples() {
        let m = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(sample_mean(&m).as_slice(), &[1.0, 2.0]);
        let one = DataMatrix::from_rows(&[vec![3.0, -1.0]]).unwrap();
        assert_eq!(sample_mean(&one).as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = random_sym(6, 1);
        let b = DMatrix::from_fn(6, 6, |i, j| (i * 7 + j) as f64 * 0.1);
        assert!((trace_product(&a, &b) - (&a * &b).trace()).abs() < 1e-12);
    }
}
