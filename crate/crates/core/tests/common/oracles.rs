//! Brute-force reference implementations by direct nested summation.

use hidim::mean_iid::PaParts;
use hidim::TwoSample;
use nalgebra::{DMatrix, DVector};

pub fn rows(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    (0..m.nrows()).map(|i| m.row(i).transpose()).collect()
}

pub fn mean_excluding(v: &[DVector<f64>], skip: &[usize]) -> DVector<f64> {
    let mut acc = DVector::zeros(v[0].len());
    let mut c = 0.0;
    for (i, r) in v.iter().enumerate() {
        if !skip.contains(&i) {
            acc += r;
            c += 1.0;
        }
    }
    acc / c
}

pub fn brute_cq(s: &TwoSample) -> (f64, f64, f64) {
    let x = rows(s.x.values());
    let y = rows(s.y.values());
    let (n, m) = (x.len(), y.len());
    let one = |v: &[DVector<f64>]| {
        let k = v.len();
        let mut acc = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let mu = mean_excluding(v, &[i, j]);
                let mat = (&v[i] - &mu) * v[i].transpose() * (&v[j] - &mu) * v[j].transpose();
                acc += mat.trace();
            }
        }
        acc / (k * (k - 1)) as f64
    };
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mx = mean_excluding(&x, &[i]);
            let my = mean_excluding(&y, &[j]);
            cross += ((&x[i] - &mx) * x[i].transpose() * (&y[j] - &my) * y[j].transpose()).trace();
        }
    }
    (one(&x), one(&y), cross / (n * m) as f64)
}

pub fn leave_out_ss(v: &[DVector<f64>], skip: &[usize]) -> DVector<f64> {
    let mu = mean_excluding(v, skip);
    let mut acc = DVector::zeros(mu.len());
    for (i, r) in v.iter().enumerate() {
        if !skip.contains(&i) {
            acc += (r - &mu).component_mul(&(r - &mu));
        }
    }
    acc
}

pub fn brute_pa(s: &TwoSample) -> PaParts {
    let x = rows(s.x.values());
    let y = rows(s.y.values());
    let (n, m) = (x.len(), y.len());
    let (nf, mf) = (n as f64, m as f64);
    let total = nf + mf;
    let s1 = leave_out_ss(&x, &[]) / (nf - 1.0);
    let s2 = leave_out_ss(&y, &[]) / (mf - 1.0);
    let mut u = [0.0; 3];
    let mut tr = [0.0; 3];
    for (g, v) in [(0usize, &x), (1, &y)] {
        let k = v.len();
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let s_out = leave_out_ss(v, &[i, j]) / (k as f64 - 3.0);
                let d = if g == 0 {
                    (s_out * (nf - 3.0) + &s2 * (mf - 1.0)) / (total - 4.0)
                } else {
                    (&s1 * (nf - 1.0) + s_out * (mf - 3.0)) / (total - 4.0)
                };
                let dinv = DMatrix::from_diagonal(&d.map(|e| 1.0 / e));
                let mu = mean_excluding(v, &[i, j]);
                u[g] += (v[i].transpose() * &dinv * &v[j])[(0, 0)];
                tr[g] += (v[i].transpose() * &dinv * (&v[j] - &mu) * v[j].transpose() * &dinv * (&v[i] - &mu)).trace();
            }
        }
        u[g] /= (k * (k - 1)) as f64;
        tr[g] /= (k * (k - 1)) as f64;
    }
    for i in 0..n {
        for j in 0..m {
            let sx = leave_out_ss(&x, &[i]) / (nf - 2.0);
            let sy = leave_out_ss(&y, &[j]) / (mf - 2.0);
            let d = (sx * (nf - 2.0) + sy * (mf - 2.0)) / (total - 4.0);
            let dinv = DMatrix::from_diagonal(&d.map(|e| 1.0 / e));
            let mx = mean_excluding(&x, &[i]);
            let my = mean_excluding(&y, &[j]);
            u[2] += (x[i].transpose() * &dinv * &y[j])[(0, 0)];
            tr[2] += (x[i].transpose() * &dinv * (&y[j] - &my) * y[j].transpose() * &dinv * (&x[i] - &mx)).trace();
        }
    }
    let factor = (total - 6.0) / (total - 4.0);
    PaParts {
        u_n: factor * (u[0] + u[1] - 2.0 * u[2] / (nf * mf)),
        tr_r1_sq: tr[0],
        tr_r2_sq: tr[1],
        tr_r1_r2: tr[2] / (nf * mf),
    }
}

pub fn brute_within(v: &[DVector<f64>]) -> f64 {
    let n = v.len();
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            s2 += v[i].dot(&v[j]).powi(2);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                s3 += v[i].dot(&v[j]) * v[j].dot(&v[k]);
                for l in 0..n {
                    if l == i || l == j || l == k {
                        continue;
                    }
                    s4 += v[i].dot(&v[j]) * v[k].dot(&v[l]);
                }
            }
        }
    }
    let nf = n as f64;
    s2 / (nf * (nf - 1.0)) - 2.0 * s3 / (nf * (nf - 1.0) * (nf - 2.0))
        + s4 / (nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0))
}

pub fn brute_cross(x: &[DVector<f64>], y: &[DVector<f64>]) -> f64 {
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut t1, mut t2, mut t3, mut t4) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..y.len() {
            t1 += x[i].dot(&y[j]).powi(2);
            for k in 0..x.len() {
                if k != i {
                    t2 += x[i].dot(&y[j]) * y[j].dot(&x[k]);
                }
            }
            for l in 0..y.len() {
                if l != j {
                    t3 += y[j].dot(&x[i]) * x[i].dot(&y[l]);
                }
            }
            for k in 0..x.len() {
                for l in 0..y.len() {
                    if k != i && l != j {
                        t4 += x[i].dot(&y[j]) * x[k].dot(&y[l]);
                    }
                }
            }
        }
    }
    t1 / (n * m) - t2 / (n * (n - 1.0) * m) - t3 / (n * m * (m - 1.0)) + t4 / (n * (n - 1.0) * m * (m - 1.0))
}

/// All count vectors of length p summing to n.
pub fn compositions(n: u64, p: usize) -> Vec<Vec<u64>> {
    if p == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, p - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
