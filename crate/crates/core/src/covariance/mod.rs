//! Covariance estimation and covariance hypothesis tests. Sample
//! covariances here use divisor n unless stated otherwise.

mod equality;
mod estimate;
mod structure;

pub use equality::{
    equality_lrt, equality_lrt_corrected, li_chen_functional, li_chen_parts, li_chen_test, schott_fn, schott_test,
    LiChenParts,
};
pub use estimate::{
    band, banded_covariance, gaussian_loglik_cov, gaussian_loglik_prec, penalized_objective, penalty_value,
    BandedEstimate, PenaltySpec, PenaltyTarget,
};
pub use structure::{
    identity_lrt_corrected, identity_test_vn, identity_test_wn, projected_structure_test, sphericity_test_un,
    u_from_eigenvalues, u_functional, v_functional, w_functional, StructureHypothesis,
};
