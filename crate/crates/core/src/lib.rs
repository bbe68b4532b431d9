//! High-dimensional inference: two-sample mean tests, projection tests,
//! dependent-data mean tests, covariance estimation and tests, and discrete
//! multivariate models.

pub mod covariance;
pub mod data;
pub mod dependent;
pub mod discrete;
pub mod error;
pub mod factor;
pub mod linalg;
pub mod mean_iid;
pub mod perm;
pub mod projection;
pub mod result;
pub mod rng;
pub mod special;
pub mod stats;

pub use data::{DataMatrix, TwoSample};
pub use error::{Error, Result};
pub use factor::{generate_factor_sample, FactorModelSpec, Innovation};
pub use linalg::{pooled_covariance, sample_mean, sym_eigen};
pub use result::{NullDist, TestResult};
pub use rng::RngStream;
