use super::generate::{generate_projection, ProjectionKind, ProjectionMatrix, ProjectionSpec};
use crate::data::TwoSample;
use crate::error::{Error, Result};
use crate::linalg::sample_mean;
use crate::mean_iid::{hotelling_from_quadratic, stacked_residuals};
use crate::result::{NullDist, TestResult};
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// ⌊(n+m)/2⌋.
pub fn default_k(n: usize, m: usize) -> usize {
    (n + m) / 2
}

fn check_k(k: usize, total: usize) -> Result<()> {
    if k == 0 || k + 2 >= total {
        return Err(Error::Dimension(format!("projection needs 1 ≤ k < n+m−2 (k={k}, n+m={total})")));
    }
    Ok(())
}

/// T²_R from projected residuals `rz` (k × N) and projected mean difference.
fn t2_from_projected(n: usize, m: usize, rz: &DMatrix<f64>, rd: &DVector<f64>) -> Result<(f64, f64, NullDist)> {
    let div = (n + m) as f64 - 2.0;
    let cov = rz * rz.transpose() / div;
    let scale = cov.trace() / cov.nrows() as f64;
    let chol = cov.cholesky().ok_or_else(|| Error::Singular("projected covariance is not positive definite".into()))?;
    let l = chol.l();
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
    if !(min_pivot > 1e-12 * scale) {
        return Err(Error::Singular(format!("projected covariance is singular (pivot {min_pivot:.3e})")));
    }
    let w = l.solve_lower_triangular(rd).expect("triangular solve");
    Ok(hotelling_from_quadratic(n, m, rz.nrows(), w.norm_squared()))
}

/// Hotelling test on the data mapped through a fixed k × p matrix R,
/// conditional on R.
pub fn t2_random_projection(s: &TwoSample, r: &ProjectionMatrix) -> Result<TestResult> {
    let (n, m) = (s.n(), s.m());
    let rv = &r.values;
    if rv.ncols() != s.p() {
        return Err(Error::Dimension(format!("projection has {} columns, data has p={}", rv.ncols(), s.p())));
    }
    check_k(rv.nrows(), n + m)?;
    let z = stacked_residuals(s.x.values(), s.y.values());
    let rz = rv * z.transpose();
    let rd = rv * (sample_mean(&s.x) - sample_mean(&s.y));
    let (t2, pv, nd) = t2_from_projected(n, m, &rz, &rd)?;
    Ok(TestResult::new("random-projection", t2, pv, nd).with_diag("k", rv.nrows() as f64))
}

/// Data reduced for repeated projection. For rotation-invariant kinds with
/// p > N+1 only the triangular factor U of [Zᵀ d] = QU is kept: R Q is then
/// a k × (N+1) matrix with the same law as R itself, so T²_R can be drawn
/// from G·U with G of that shape, exactly in distribution.
enum Prepared {
    Coordinates { u: DMatrix<f64> },
    Full { zt: DMatrix<f64>, d: DVector<f64> },
}

fn prepare(s: &TwoSample, kind: ProjectionKind) -> Prepared {
    let z = stacked_residuals(s.x.values(), s.y.values());
    let d = sample_mean(&s.x) - sample_mean(&s.y);
    let total = z.nrows();
    let zt = z.transpose();
    if kind.rotation_invariant() && s.p() > total + 1 {
        let mut w = DMatrix::zeros(s.p(), total + 1);
        w.columns_mut(0, total).copy_from(&zt);
        w.set_column(total, &d);
        Prepared::Coordinates { u: w.qr().r() }
    } else {
        Prepared::Full { zt, d }
    }
}

fn projected_pvalue(
    prep: &Prepared,
    n: usize,
    m: usize,
    p: usize,
    kind: ProjectionKind,
    k: usize,
    stream: RngStream,
) -> Result<f64> {
    let (rz, rd) = match prep {
        Prepared::Coordinates { u } => {
            let mut rng = stream.rng();
            let g = DMatrix::<f64>::from_fn(k, u.nrows(), |_, _| StandardNormal.sample(&mut rng));
            let gu = g * u;
            let total = n + m;
            (gu.columns(0, total).into_owned(), gu.column(total).into_owned())
        }
        Prepared::Full { zt, d } => {
            let r = generate_projection(ProjectionSpec { kind, k, stream }, p)?.values;
            (&r * zt, &r * d)
        }
    };
    Ok(t2_from_projected(n, m, &rz, &rd)?.1)
}

/// Mean p-value p̄ over `n_projections` independent projections.
pub fn raptt_mean_pvalue(
    s: &TwoSample,
    kind: ProjectionKind,
    k: usize,
    n_projections: usize,
    stream: &RngStream,
) -> Result<f64> {
    check_k(k, s.n() + s.m())?;
    if n_projections == 0 {
        return Err(Error::InvalidInput("need at least one projection".into()));
    }
    if matches!(kind, ProjectionKind::Haar | ProjectionKind::BlockWeighted) && k > s.p() {
        return Err(Error::Dimension(format!("{kind} projection needs k ≤ p")));
    }
    let prep = prepare(s, kind);
    let mut sum = 0.0;
    for j in 0..n_projections {
        sum += projected_pvalue(&prep, s.n(), s.m(), s.p(), kind, k, stream.derive(j as u64))?;
    }
    Ok(sum / n_projections as f64)
}

/// Cutoff on p̄ at level α from null draws: the ⌊(M+1)α⌋-th smallest value
/// (0 when that index is 0). Rejection is for p̄ strictly below it, which
/// has probability at most α when p̄ and the M null draws are exchangeable.
pub fn raptt_cutoff(null_pbar: &[f64], alpha: f64) -> f64 {
    let mut v = null_pbar.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() + 1) as f64 * alpha).floor() as usize;
    if idx == 0 {
        0.0
    } else {
        v[idx.min(v.len()) - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RapttConfig {
    pub kind: ProjectionKind,
    /// Defaults to ⌊(n+m)/2⌋.
    pub k: Option<usize>,
    pub n_projections: usize,
    pub null_reps: usize,
    pub alpha: f64,
}

impl Default for RapttConfig {
    fn default() -> Self {
        Self { kind: ProjectionKind::Gaussian, k: None, n_projections: 50, null_reps: 200, alpha: 0.05 }
    }
}

/// Averaged random-projection test. The null law of p̄ does not depend on
/// the mean or covariance, so it is simulated from N(0, I) samples of the
/// same shape. Statistic is p̄; the p-value is its rank among the null draws.
pub fn raptt(s: &TwoSample, cfg: &RapttConfig, stream: &RngStream) -> Result<TestResult> {
    let (n, m, p) = (s.n(), s.m(), s.p());
    let k = cfg.k.unwrap_or_else(|| default_k(n, m));
    if cfg.null_reps < 50 {
        return Err(Error::InvalidInput(format!("RAPTT needs at least 50 null replicates, got {}", cfg.null_reps)));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    let observed = raptt_mean_pvalue(s, cfg.kind, k, cfg.n_projections, &stream.derive(0))?;
    let null_root = stream.derive(1);
    let null: Vec<f64> = (0..cfg.null_reps)
        .into_par_iter()
        .map(|r| {
            let rep = null_root.derive(r as u64);
            let mut rng = rep.derive(0).rng();
            let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
            let y = DMatrix::from_fn(m, p, |_, _| StandardNormal.sample(&mut rng));
            let sim = TwoSample::from_matrices(x, y)?;
            raptt_mean_pvalue(&sim, cfg.kind, k, cfg.n_projections, &rep.derive(1))
        })
        .collect::<Result<_>>()?;
    let cutoff = raptt_cutoff(&null, cfg.alpha);
    let below = null.iter().filter(|&&v| v <= observed).count();
    let pv = (1 + below) as f64 / (cfg.null_reps + 1) as f64;
    let mut res = TestResult::new("raptt", observed, pv, NullDist::Empirical { count: cfg.null_reps })
        .with_diag("k", k as f64)
        .with_diag("cutoff", cutoff)
        .with_diag("alpha", cfg.alpha);
    res.decision = Some(observed < cutoff);
    Ok(res)
}
