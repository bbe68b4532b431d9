//! Permutation calibration shared by the permutation-based tests.

use crate::rng::{RngStream, StreamRng};
use rayon::prelude::*;

pub const DEFAULT_PERMUTATIONS: usize = 999;

/// Permutation p-value (1 + #{T_b ≥ T_obs}) / (B + 1).
///
/// `stat` receives a generator private to permutation b, derived from
/// `stream`, so the result does not depend on the worker count.
pub fn permutation_pvalue<F>(observed: f64, permutations: usize, stream: &RngStream, stat: F) -> f64
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    let slack = 1e-12 * observed.abs().max(1e-300);
    let hits: usize = (0..permutations)
        .into_par_iter()
        .map(|b| {
            let mut r = stream.derive(b as u64).rng();
            usize::from(stat(&mut r) >= observed - slack)
        })
        .sum();
    (1 + hits) as f64 / (permutations + 1) as f64
}

/// Random reordering of 0..len.
pub fn shuffled_indices(len: usize, rng: &mut StreamRng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    idx
}
