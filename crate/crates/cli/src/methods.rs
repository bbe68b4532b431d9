//! Name-based dispatch shared by `test` and `simulate`.

use hidim::covariance::{
    equality_lrt, equality_lrt_corrected, identity_lrt_corrected, identity_test_vn, identity_test_wn, li_chen_test,
    schott_test, sphericity_test_un,
};
use hidim::dependent::apr_test;
use hidim::discrete::{multinomial_two_sample, CountVector, MultinomialMethod, MultinomialTestConfig};
use hidim::mean_iid::{
    bai_saranadasa, chen_qin, chung_fraser, clx_max_test, dempster, hotelling_t2, park_ayyala, pct, srivastava_du,
    zoh_bayes_factor, ChungFraserScale, ClxPrecision,
};
use hidim::projection::{projected_hotelling, raptt, ProjectionKind, RapttConfig};
use hidim::{DataMatrix, Error, Result, RngStream, TestResult, TwoSample};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::str::FromStr;

pub const MEAN_METHODS: &[&str] = &[
    "bs",
    "cq",
    "sd",
    "sd-uncorrected",
    "pa",
    "hotelling",
    "dempster",
    "chung-fraser",
    "pct",
    "clx",
    "zoh",
    "raptt",
    "apr",
    "projected",
];

pub const COVARIANCE_METHODS: &[&str] =
    &["lrt", "lrt-corrected", "schott", "li-chen", "sphericity", "identity-v", "identity-w", "identity-lrt"];

/// Knobs that some mean tests need; unused ones are ignored.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanOptions {
    pub alpha: f64,
    pub permutations: usize,
    pub projections: usize,
    pub null_reps: usize,
    pub projection_kind: String,
    pub k: Option<usize>,
    pub order: usize,
    pub tau0: f64,
    pub clx_precision: String,
}

impl Default for MeanOptions {
    fn default() -> Self {
        let r = RapttConfig::default();
        Self {
            alpha: 0.05,
            permutations: 199,
            projections: r.n_projections,
            null_reps: r.null_reps,
            projection_kind: "gaussian".into(),
            k: None,
            order: 0,
            tau0: 1.0,
            clx_precision: "diagonal".into(),
        }
    }
}

impl MeanOptions {
    /// Options that matter for `method`, for the JSON `params` block.
    pub fn describe(&self, method: &str) -> Map<String, Value> {
        let mut m = Map::new();
        match method {
            "chung-fraser" => {
                m.insert("permutations".into(), json!(self.permutations));
            }
            "raptt" => {
                m.insert("projections".into(), json!(self.projections));
                m.insert("null_reps".into(), json!(self.null_reps));
                m.insert("projection_kind".into(), json!(self.projection_kind));
                m.insert("k".into(), json!(self.k));
                m.insert("alpha".into(), json!(self.alpha));
            }
            "projected" => {
                m.insert("k".into(), json!(self.k));
            }
            "apr" => {
                m.insert("order".into(), json!(self.order));
            }
            "zoh" => {
                m.insert("tau0".into(), json!(self.tau0));
                m.insert("alpha".into(), json!(self.alpha));
            }
            "clx" => {
                m.insert("clx_precision".into(), json!(self.clx_precision));
                m.insert("alpha".into(), json!(self.alpha));
            }
            _ => {}
        }
        m
    }
}

fn unknown(kind: &str, name: &str, known: &[&str]) -> Error {
    Error::InvalidInput(format!("unknown {kind} method '{name}' (expected one of: {})", known.join(", ")))
}

pub fn check_mean_method(name: &str) -> Result<()> {
    if MEAN_METHODS.contains(&name) {
        Ok(())
    } else {
        Err(unknown("mean", name, MEAN_METHODS))
    }
}

pub fn check_covariance_method(name: &str) -> Result<()> {
    if COVARIANCE_METHODS.contains(&name) {
        Ok(())
    } else {
        Err(unknown("covariance", name, COVARIANCE_METHODS))
    }
}

pub fn run_mean(method: &str, s: &TwoSample, opts: &MeanOptions, stream: &RngStream) -> Result<TestResult> {
    match method {
        "bs" => bai_saranadasa(s),
        "cq" => chen_qin(s),
        "sd" => srivastava_du(s, false),
        "sd-uncorrected" => srivastava_du(s, true),
        "pa" => park_ayyala(s),
        "hotelling" => hotelling_t2(s),
        "dempster" => dempster(s),
        "chung-fraser" => chung_fraser(s, ChungFraserScale::StdDev, opts.permutations, stream),
        "pct" => pct(s, None),
        "clx" => {
            let omega = match opts.clx_precision.as_str() {
                "identity" => ClxPrecision::Identity,
                "diagonal" => ClxPrecision::DiagonalInverse,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown clx precision '{other}' (expected identity or diagonal)"
                    )))
                }
            };
            clx_max_test(s, &omega, opts.alpha)
        }
        "zoh" => zoh_bayes_factor(s, opts.tau0, opts.alpha),
        "raptt" => {
            let cfg = RapttConfig {
                kind: ProjectionKind::from_str(&opts.projection_kind)?,
                k: opts.k,
                n_projections: opts.projections,
                null_reps: opts.null_reps,
                alpha: opts.alpha,
            };
            raptt(s, &cfg, stream)
        }
        "apr" => apr_test(s, opts.order),
        "projected" => {
            let k = opts.k.ok_or_else(|| Error::InvalidInput("method 'projected' needs --k".into()))?;
            projected_hotelling(s, k)
        }
        other => Err(unknown("mean", other, MEAN_METHODS)),
    }
}

/// Whether a covariance method compares two groups (otherwise it uses x only).
pub fn covariance_is_two_sample(method: &str) -> bool {
    matches!(method, "lrt" | "lrt-corrected" | "schott" | "li-chen")
}

pub fn run_covariance(
    method: &str,
    x: &DataMatrix,
    y: Option<&DataMatrix>,
    permutations: usize,
    stream: &RngStream,
) -> Result<TestResult> {
    check_covariance_method(method)?;
    if covariance_is_two_sample(method) {
        let y = y.ok_or_else(|| Error::InvalidInput(format!("method '{method}' needs a second group (--y)")))?;
        let groups = [x.clone(), y.clone()];
        return match method {
            "lrt" => equality_lrt(&groups),
            "lrt-corrected" => equality_lrt_corrected(&groups),
            "schott" => schott_test(&groups, permutations, stream),
            _ => li_chen_test(&TwoSample::new(x.clone(), y.clone())?, permutations, stream),
        };
    }
    match method {
        "sphericity" => sphericity_test_un(x),
        "identity-v" => identity_test_vn(x),
        "identity-w" => identity_test_wn(x),
        _ => identity_lrt_corrected(x),
    }
}

pub fn run_multinomial(
    method: &str,
    x: &CountVector,
    y: &CountVector,
    permutations: usize,
    df: Option<f64>,
    stream: &RngStream,
) -> Result<TestResult> {
    let cfg = MultinomialTestConfig { method: MultinomialMethod::from_str(method)?, permutations, df };
    multinomial_two_sample(x, y, &cfg, stream)
}
