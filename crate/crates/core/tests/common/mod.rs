#![allow(dead_code)]

pub mod oracles;

use hidim::{RngStream, TwoSample};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian<R: Rng>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    a
}

/// N(0, I) for x and N(shift·1, I) for y.
pub fn null_pair(n: usize, m: usize, p: usize, shift: f64, stream: &RngStream) -> TwoSample {
    let mut r = stream.rng();
    let x = gaussian(n, p, &mut r);
    let y = gaussian(m, p, &mut r).add_scalar(shift);
    TwoSample::from_matrices(x, y).unwrap()
}

pub fn random_orthogonal<R: Rng>(p: usize, rng: &mut R) -> DMatrix<f64> {
    gaussian(p, p, rng).qr().q()
}

pub fn apply_right(s: &TwoSample, a: &DMatrix<f64>) -> TwoSample {
    TwoSample::from_matrices(s.x.values() * a, s.y.values() * a).unwrap()
}

pub fn shift(s: &TwoSample, v: &DVector<f64>) -> TwoSample {
    let add = |m: &DMatrix<f64>| {
        let mut c = m.clone();
        for mut r in c.row_iter_mut() {
            r += v.transpose();
        }
        c
    };
    TwoSample::from_matrices(add(s.x.values()), add(s.y.values())).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Empirical rejection rate of `f` over `reps` seeded replicates.
pub fn rate<F: Fn(u64) -> bool + Sync>(reps: usize, f: F) -> f64 {
    use rayon::prelude::*;
    let hits: usize = (0..reps as u64).into_par_iter().map(|i| usize::from(f(i))).sum();
    hits as f64 / reps as f64
}

/// x ~ N(0, Σ), y ~ N(δ·1, Σ) with Σ = diag(σ²_k), σ²_k ~ Unif(2, 3).
/// Noise is drawn from `stream` independently of δ, so calls differing only
/// in δ share the same underlying draws.
pub fn diag_shift_sample(n: usize, m: usize, p: usize, delta: f64, stream: &RngStream) -> TwoSample {
    let mut r = stream.rng();
    let sd: Vec<f64> = (0..p).map(|_| (2.0 + r.gen::<f64>()).sqrt()).collect();
    let x = DMatrix::from_fn(n, p, |_, k| {
        sd[k] * {
            let z: f64 = StandardNormal.sample(&mut r);
            z
        }
    });
    let y = DMatrix::from_fn(m, p, |_, k| {
        delta
            + sd[k] * {
                let z: f64 = StandardNormal.sample(&mut r);
                z
            }
    });
    TwoSample::from_matrices(x, y).unwrap()
}
