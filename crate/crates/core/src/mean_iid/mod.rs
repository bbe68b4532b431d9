//! Two-sample mean tests for independent observations.

mod asymptotic;
mod component;
mod diagnostics;
mod hotelling;
mod zoh;

pub use asymptotic::{
    bai_saranadasa, chen_qin, cq_trace_estimates, park_ayyala, park_ayyala_parts, srivastava_du, PaParts,
    TraceEstimates,
};
pub use component::{chung_fraser, clx_max_test, dempster, gct_aggregate, pct, ChungFraserScale, ClxPrecision};
pub use diagnostics::{assumption_diagnostics, spectral_ratios, SpectralRatios};
pub use hotelling::{hotelling_from_quadratic, hotelling_t2};
pub use zoh::{zoh_bayes_factor, zoh_bf10, zoh_threshold};

use nalgebra::DMatrix;

/// Both groups centered by their own means, stacked: (n+m) × p.
pub(crate) fn stacked_residuals(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let zx = crate::linalg::center(x);
    let zy = crate::linalg::center(y);
    let mut z = DMatrix::zeros(x.nrows() + y.nrows(), x.ncols());
    z.rows_mut(0, x.nrows()).copy_from(&zx);
    z.rows_mut(x.nrows(), y.nrows()).copy_from(&zy);
    z
}

/// tr(S) and tr(S²) for S = ZᵀZ/div, through whichever Gram side is smaller.
pub(crate) fn trace_s_s2(z: &DMatrix<f64>, div: f64) -> (f64, f64) {
    let tr = z.norm_squared() / div;
    let g = if z.ncols() <= z.nrows() { z.tr_mul(z) } else { z * z.transpose() };
    (tr, g.norm_squared() / (div * div))
}
