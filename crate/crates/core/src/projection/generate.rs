use crate::error::{Error, Result};
use crate::perm::shuffled_indices;
use crate::rng::RngStream;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::str::FromStr;

/// Entry law of a random projection matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionKind {
    Gaussian,
    /// Uniform on (−√3, √3).
    UniformSqrt3,
    /// ±1 with equal probability.
    Sign,
    /// ±√θ with probability 1/(2θ) each, else 0. `None` means θ = √p.
    Sparse {
        theta: Option<f64>,
    },
    /// Orthonormal rows.
    Haar,
    /// Each row weights a disjoint random block of columns equally.
    BlockWeighted,
}

impl ProjectionKind {
    /// Kinds whose projected statistic depends on R only through its row
    /// space, with that row space uniformly distributed.
    pub(crate) fn rotation_invariant(self) -> bool {
        matches!(self, ProjectionKind::Gaussian | ProjectionKind::Haar)
    }
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionKind::Gaussian => write!(f, "gaussian"),
            ProjectionKind::UniformSqrt3 => write!(f, "uniform_sqrt3"),
            ProjectionKind::Sign => write!(f, "sign"),
            ProjectionKind::Sparse { theta: None } => write!(f, "sparse"),
            ProjectionKind::Sparse { theta: Some(t) } => write!(f, "sparse:{t}"),
            ProjectionKind::Haar => write!(f, "haar"),
            ProjectionKind::BlockWeighted => write!(f, "block_weighted"),
        }
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "gaussian" => ProjectionKind::Gaussian,
            "uniform_sqrt3" | "uniform" => ProjectionKind::UniformSqrt3,
            "sign" => ProjectionKind::Sign,
            "sparse" => ProjectionKind::Sparse { theta: None },
            "haar" | "haar_orthogonal" => ProjectionKind::Haar,
            "block_weighted" | "block" => ProjectionKind::BlockWeighted,
            other => match other.strip_prefix("sparse:").map(str::parse::<f64>) {
                Some(Ok(t)) => ProjectionKind::Sparse { theta: Some(t) },
                _ => return Err(Error::InvalidInput(format!("unknown projection kind '{s}'"))),
            },
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSpec {
    pub kind: ProjectionKind,
    pub k: usize,
    pub stream: RngStream,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    /// k × p.
    pub values: DMatrix<f64>,
    pub spec: ProjectionSpec,
}

pub fn generate_projection(spec: ProjectionSpec, p: usize) -> Result<ProjectionMatrix> {
    let k = spec.k;
    if k == 0 || p == 0 {
        return Err(Error::InvalidInput("projection needs k ≥ 1 and p ≥ 1".into()));
    }
    if matches!(spec.kind, ProjectionKind::Haar | ProjectionKind::BlockWeighted) && k > p {
        return Err(Error::Dimension(format!("{} projection needs k ≤ p (k={k}, p={p})", spec.kind)));
    }
    let mut rng = spec.stream.rng();
    let values = match spec.kind {
        ProjectionKind::Gaussian => DMatrix::from_fn(k, p, |_, _| StandardNormal.sample(&mut rng)),
        ProjectionKind::UniformSqrt3 => {
            let h = 3f64.sqrt();
            DMatrix::from_fn(k, p, |_, _| rng.gen_range(-h..h))
        }
        ProjectionKind::Sign => DMatrix::from_fn(k, p, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 }),
        ProjectionKind::Sparse { theta } => {
            let t = theta.unwrap_or((p as f64).sqrt());
            if !(t >= 1.0) {
                return Err(Error::InvalidInput(format!("sparse projection needs θ ≥ 1, got {t}")));
            }
            let (mag, q) = (t.sqrt(), 1.0 / (2.0 * t));
            DMatrix::from_fn(k, p, |_, _| {
                let u: f64 = rng.gen();
                if u < q {
                    mag
                } else if u < 2.0 * q {
                    -mag
                } else {
                    0.0
                }
            })
        }
        ProjectionKind::Haar => {
            let a = DMatrix::<f64>::from_fn(p, k, |_, _| StandardNormal.sample(&mut rng));
            let qr = a.qr();
            let mut q = qr.q();
            let r = qr.r();
            // sign fix makes the law exactly Haar
            for j in 0..k {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            q.transpose()
        }
        ProjectionKind::BlockWeighted => {
            let order = shuffled_indices(p, &mut rng);
            let mut r = DMatrix::zeros(k, p);
            let (base, extra) = (p / k, p % k);
            let mut start = 0;
            for row in 0..k {
                let len = base + usize::from(row < extra);
                let w = 1.0 / (len as f64).sqrt();
                for &c in &order[start..start + len] {
                    r[(row, c)] = w;
                }
                start += len;
            }
            r
        }
    };
    Ok(ProjectionMatrix { values, spec })
}
