//! Factor-model data generator X = μ + ΓZ.

use crate::data::DataMatrix;
use crate::error::{invalid, Result};
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

/// Innovation law, always standardized to mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Normal,
    Laplace,
    CenteredGamma { shape: f64 },
}

impl Innovation {
    /// Excess fourth moment E z⁴ − 3.
    pub fn delta(&self) -> f64 {
        match self {
            Innovation::Normal => 0.0,
            Innovation::Laplace => 3.0,
            Innovation::CenteredGamma { shape } => 6.0 / shape,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Innovation::CenteredGamma { shape } = self {
            if !(*shape > 0.0 && shape.is_finite()) {
                return invalid(format!("gamma shape must be positive, got {shape}"));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Innovation::Normal => StandardNormal.sample(rng),
            Innovation::Laplace => {
                let e: f64 = Exp1.sample(rng);
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                s * e / std::f64::consts::SQRT_2
            }
            Innovation::CenteredGamma { shape } => {
                let g: f64 = Gamma::new(*shape, 1.0).unwrap().sample(rng);
                (g - shape) / shape.sqrt()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorModelSpec {
    pub mu: DVector<f64>,
    /// p × q loading matrix; Σ = ΓΓᵀ.
    pub gamma: DMatrix<f64>,
    pub innovation: Innovation,
}

impl FactorModelSpec {
    pub fn new(mu: DVector<f64>, gamma: DMatrix<f64>, innovation: Innovation) -> Result<Self> {
        if gamma.nrows() != mu.len() {
            return invalid(format!("gamma has {} rows but mu has length {}", gamma.nrows(), mu.len()));
        }
        innovation.validate()?;
        Ok(Self { mu, gamma, innovation })
    }

    /// Standard normal model N(μ, I).
    pub fn isotropic(mu: DVector<f64>) -> Self {
        let p = mu.len();
        Self { mu, gamma: DMatrix::identity(p, p), innovation: Innovation::Normal }
    }

    pub fn delta(&self) -> f64 {
        self.innovation.delta()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.gamma * self.gamma.transpose()
    }
}

/// n × q matrix of i.i.d. innovations filled row by row.
pub fn innovation_matrix<R: Rng + ?Sized>(law: Innovation, n: usize, q: usize, rng: &mut R) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(n, q);
    for i in 0..n {
        for j in 0..q {
            z[(i, j)] = law.sample(rng);
        }
    }
    z
}

pub fn generate_factor_sample(spec: &FactorModelSpec, n: usize, rng: &RngStream) -> Result<DataMatrix> {
    spec.innovation.validate()?;
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let mut r = rng.rng();
    Ok(DataMatrix::new(sample_factor_rows(spec, n, &mut r))?)
}

/// Same draw as [`generate_factor_sample`] from an existing generator.
pub fn sample_factor_rows<R: Rng + ?Sized>(spec: &FactorModelSpec, n: usize, rng: &mut R) -> DMatrix<f64> {
    let z = innovation_matrix(spec.innovation, n, spec.gamma.ncols(), rng);
    let mut x = z * spec.gamma.transpose();
    let mu = spec.mu.transpose();
    for mut r in x.row_iter_mut() {
        r += &mu;
    }
    x
}
