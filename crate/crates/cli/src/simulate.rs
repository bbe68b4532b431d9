//! Declarative Monte Carlo studies: size and power of the tests under a
//! generated model. Every replicate draws from its own derived stream, so
//! records are identical for any worker count.

use crate::args::SimulateArgs;
use crate::methods::{self, MeanOptions};
use crate::{envelope, to_json, CliError, CliResult};
use hidim::dependent::{generate_ma_process, StationaryProcessSpec};
use hidim::discrete::{multinomial_sample, CountVector, MultinomialParams};
use hidim::projection::{max_scan_k, scan_k};
use hidim::{generate_factor_sample, FactorModelSpec, Innovation, RngStream, TestResult, TwoSample};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    MeanIid,
    MeanProjectionScan,
    MeanDependent,
    Covariance,
    Multinomial,
}

/// Study description. Keys that a scenario does not use are ignored;
/// unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub methods: Vec<String>,
    /// Overrides the command-line seed when present.
    pub seed: Option<u64>,
    /// Shift of every coordinate of the second group's mean.
    #[serde(default)]
    pub delta: f64,
    /// identity, diag_uniform, ar1 or compound.
    #[serde(default = "default_sigma")]
    pub sigma: String,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_low")]
    pub sigma_low: f64,
    #[serde(default = "default_high")]
    pub sigma_high: f64,
    /// normal, laplace or gamma.
    #[serde(default = "default_innovation")]
    pub innovation: String,
    #[serde(default = "default_shape")]
    pub gamma_shape: f64,
    /// Covariance scenario: Σ_y = sigma_scale2 · Σ_x.
    #[serde(default = "default_one")]
    pub sigma_scale2: f64,
    /// Dependent scenario: A_j = ma[j]·I.
    #[serde(default = "default_ma")]
    pub ma: Vec<f64>,
    /// Projection scan: k values (default 1..=max).
    #[serde(default)]
    pub ks: Vec<usize>,
    /// Multinomial: category weights of each group (default uniform).
    #[serde(default)]
    pub pi_weights: Vec<f64>,
    #[serde(default)]
    pub pi_y_weights: Vec<f64>,
    pub df: Option<f64>,
    /// Method knobs (permutations, projections, null_reps, k, order, ...).
    #[serde(default)]
    pub options: MeanOptions,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_sigma() -> String {
    "identity".into()
}
fn default_rho() -> f64 {
    0.5
}
fn default_low() -> f64 {
    2.0
}
fn default_high() -> f64 {
    3.0
}
fn default_innovation() -> String {
    "normal".into()
}
fn default_shape() -> f64 {
    4.0
}
fn default_one() -> f64 {
    1.0
}
fn default_ma() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub method: String,
    pub replicate: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub records: usize,
    pub rejection_rate: f64,
    pub mc_se: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub records: Vec<ResultRecord>,
    pub summary: Vec<MethodSummary>,
    pub failures: Vec<String>,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> hidim::Error {
    hidim::Error::InvalidInput(format!("config field '{field}': {msg}"))
}

impl SimConfig {
    pub fn from_toml(text: &str) -> hidim::Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| hidim::Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> hidim::Result<()> {
        if self.replications == 0 {
            return Err(bad("replications", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(bad("alpha", "must lie in (0, 1)"));
        }
        if self.p == 0 {
            return Err(bad("p", "must be at least 1"));
        }
        match self.scenario {
            Scenario::MeanIid | Scenario::MeanDependent | Scenario::Covariance => {
                if self.methods.is_empty() {
                    return Err(bad("methods", "list at least one method"));
                }
            }
            Scenario::MeanProjectionScan => {
                if !self.methods.is_empty() {
                    return Err(bad("methods", "the projection scan reports one record per k; leave methods empty"));
                }
            }
            Scenario::Multinomial => {
                if self.methods.is_empty() {
                    return Err(bad("methods", "list at least one method"));
                }
                for (field, w) in [("pi_weights", &self.pi_weights), ("pi_y_weights", &self.pi_y_weights)] {
                    if !w.is_empty() && w.len() != self.p {
                        return Err(bad(field, format!("has {} entries, p = {}", w.len(), self.p)));
                    }
                }
            }
        }
        for m in &self.methods {
            match self.scenario {
                Scenario::MeanIid | Scenario::MeanDependent => methods::check_mean_method(m),
                Scenario::Covariance => methods::check_covariance_method(m),
                Scenario::Multinomial => m.parse::<hidim::discrete::MultinomialMethod>().map(|_| ()),
                Scenario::MeanProjectionScan => Ok(()),
            }
            .map_err(|e| bad("methods", e))?;
        }
        if self.ma.is_empty() {
            return Err(bad("ma", "needs at least the lag-0 coefficient"));
        }
        let _ = self.innovation()?;
        Ok(())
    }

    fn innovation(&self) -> hidim::Result<Innovation> {
        match self.innovation.as_str() {
            "normal" => Ok(Innovation::Normal),
            "laplace" => Ok(Innovation::Laplace),
            "gamma" => Ok(Innovation::CenteredGamma { shape: self.gamma_shape }),
            other => Err(bad("innovation", format!("unknown law '{other}'"))),
        }
    }

    /// Square root Γ of the configured Σ (Σ = ΓΓᵀ).
    fn sigma_root(&self, seed: u64) -> hidim::Result<DMatrix<f64>> {
        let p = self.p;
        let sigma = match self.sigma.as_str() {
            "identity" => return Ok(DMatrix::identity(p, p)),
            "diag_uniform" => {
                if !(self.sigma_low > 0.0 && self.sigma_low <= self.sigma_high) {
                    return Err(bad("sigma_low", "need 0 < sigma_low <= sigma_high"));
                }
                let mut r = RngStream::new(seed, u64::MAX).rng();
                let sd = DVector::from_fn(p, |_, _| r.gen_range(self.sigma_low..=self.sigma_high).sqrt());
                return Ok(DMatrix::from_diagonal(&sd));
            }
            "ar1" => DMatrix::from_fn(p, p, |i, j| self.rho.powi(i.abs_diff(j) as i32)),
            "compound" => DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { self.rho }),
            other => return Err(bad("sigma", format!("unknown structure '{other}'"))),
        };
        sigma.cholesky().map(|c| c.l()).ok_or_else(|| bad("rho", "covariance is not positive definite"))
    }
}

fn factor_pair(cfg: &SimConfig, root: &DMatrix<f64>, scale_y: f64, stream: &RngStream) -> hidim::Result<TwoSample> {
    let innovation = cfg.innovation()?;
    let x_spec = FactorModelSpec::new(DVector::zeros(cfg.p), root.clone(), innovation)?;
    let y_spec = FactorModelSpec::new(DVector::from_element(cfg.p, cfg.delta), root * scale_y.sqrt(), innovation)?;
    TwoSample::new(
        generate_factor_sample(&x_spec, cfg.n, &stream.derive(0))?,
        generate_factor_sample(&y_spec, cfg.m, &stream.derive(1))?,
    )
}

fn ma_pair(cfg: &SimConfig, stream: &RngStream) -> hidim::Result<TwoSample> {
    let coefs: Vec<DMatrix<f64>> = cfg.ma.iter().map(|&a| DMatrix::identity(cfg.p, cfg.p) * a).collect();
    let x_spec = StationaryProcessSpec::new(DVector::zeros(cfg.p), coefs.clone())?;
    let y_spec = StationaryProcessSpec::new(DVector::from_element(cfg.p, cfg.delta), coefs)?;
    TwoSample::new(
        generate_ma_process(&x_spec, cfg.n, &stream.derive(0))?,
        generate_ma_process(&y_spec, cfg.m, &stream.derive(1))?,
    )
}

fn weights(w: &[f64], p: usize) -> hidim::Result<MultinomialParams> {
    if w.is_empty() {
        Ok(MultinomialParams::uniform(p))
    } else {
        MultinomialParams::from_weights(w)
    }
}

type Outcomes = Vec<(String, hidim::Result<TestResult>)>;

fn method_stream(stream: &RngStream, j: usize) -> RngStream {
    stream.derive(10 + j as u64)
}

fn replicate(cfg: &SimConfig, root: &DMatrix<f64>, stream: &RngStream) -> hidim::Result<Outcomes> {
    let mut opts = cfg.options.clone();
    opts.alpha = cfg.alpha;
    Ok(match cfg.scenario {
        Scenario::MeanIid | Scenario::MeanDependent => {
            let s = if cfg.scenario == Scenario::MeanIid {
                factor_pair(cfg, root, 1.0, stream)?
            } else {
                ma_pair(cfg, stream)?
            };
            cfg.methods
                .iter()
                .enumerate()
                .map(|(j, name)| (name.clone(), methods::run_mean(name, &s, &opts, &method_stream(stream, j))))
                .collect()
        }
        Scenario::MeanProjectionScan => {
            let s = factor_pair(cfg, root, 1.0, stream)?;
            let ks: Vec<usize> = if cfg.ks.is_empty() { (1..=max_scan_k(&s)?).collect() } else { cfg.ks.clone() };
            scan_k(&s, &ks)?
                .into_iter()
                .map(|pt| {
                    let r = TestResult::new(
                        "projected-hotelling",
                        pt.statistic,
                        pt.p_value,
                        hidim::NullDist::F { d1: pt.k as f64, d2: (cfg.n + cfg.m - pt.k - 1) as f64 },
                    );
                    (format!("projected-k{}", pt.k), Ok(r))
                })
                .collect()
        }
        Scenario::Covariance => {
            let s = factor_pair(cfg, root, cfg.sigma_scale2, stream)?;
            cfg.methods
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let perms = opts.permutations;
                    (name.clone(), methods::run_covariance(name, &s.x, Some(&s.y), perms, &method_stream(stream, j)))
                })
                .collect()
        }
        Scenario::Multinomial => {
            let px = weights(&cfg.pi_weights, cfg.p)?;
            let py = if cfg.pi_y_weights.is_empty() { px.clone() } else { weights(&cfg.pi_y_weights, cfg.p)? };
            let x: CountVector = multinomial_sample(cfg.n as u64, &px, &mut stream.derive(0).rng());
            let y: CountVector = multinomial_sample(cfg.m as u64, &py, &mut stream.derive(1).rng());
            cfg.methods
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    (
                        name.clone(),
                        methods::run_multinomial(name, &x, &y, opts.permutations, cfg.df, &method_stream(stream, j)),
                    )
                })
                .collect()
        }
    })
}

/// Runs the study. Data-generation failures abort; a test failing on one
/// replicate is counted against that method and the study continues.
pub fn run_study(cfg: &SimConfig, seed: u64) -> hidim::Result<Study> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap_or(seed);
    let root = cfg.sigma_root(seed)?;
    let per_rep: Vec<Outcomes> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| replicate(cfg, &root, &RngStream::new(seed, i as u64)))
        .collect::<hidim::Result<_>>()?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut tallies: Vec<(usize, usize, usize)> = Vec::new();
    // a method rejected as misconfigured in every replicate aborts the study
    let mut first_input_error: Vec<Option<hidim::Error>> = Vec::new();
    for (i, outcomes) in per_rep.into_iter().enumerate() {
        for (name, res) in outcomes {
            let slot = match order.iter().position(|o| *o == name) {
                Some(s) => s,
                None => {
                    order.push(name.clone());
                    tallies.push((0, 0, 0));
                    first_input_error.push(None);
                    order.len() - 1
                }
            };
            match res {
                Ok(r) => {
                    let reject = r.reject(cfg.alpha);
                    tallies[slot].0 += 1;
                    tallies[slot].1 += usize::from(reject);
                    records.push(ResultRecord {
                        method: name,
                        replicate: i,
                        statistic: r.statistic,
                        p_value: r.p_value,
                        reject,
                    });
                }
                Err(e) => {
                    tallies[slot].2 += 1;
                    failures.push(format!("replicate {i}, {name}: {e}"));
                    if e.is_input_error() && first_input_error[slot].is_none() {
                        first_input_error[slot] = Some(e);
                    }
                }
            }
        }
    }
    for ((name, t), e) in order.iter().zip(&tallies).zip(first_input_error) {
        if let (0, Some(e)) = (t.0, e) {
            return Err(hidim::Error::InvalidInput(format!("method '{name}': {e}")));
        }
    }
    let summary = order
        .into_iter()
        .zip(tallies)
        .map(|(method, (count, rejects, failed))| {
            let rate = if count > 0 { rejects as f64 / count as f64 } else { f64::NAN };
            let se = if count > 0 { (rate * (1.0 - rate) / count as f64).sqrt() } else { f64::NAN };
            MethodSummary { method, records: count, rejection_rate: rate, mc_se: se, failures: failed }
        })
        .collect();
    Ok(Study { records, summary, failures })
}

pub fn records_csv(records: &[ResultRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "replicate", "statistic", "p_value", "reject"]).expect("in-memory write");
    for r in records {
        w.write_record([
            r.method.clone(),
            r.replicate.to_string(),
            format!("{}", r.statistic),
            format!("{}", r.p_value),
            u8::from(r.reject).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

pub fn cmd_simulate(a: &SimulateArgs, seed: u64) -> CliResult<String> {
    let text =
        std::fs::read_to_string(&a.config).map_err(|e| CliError::input(format!("{}: {e}", a.config.display())))?;
    let cfg = SimConfig::from_toml(&text)?;
    let study = run_study(&cfg, seed)?;
    if let Some(path) = &a.records {
        write_file(path, &records_csv(&study.records))?;
    }
    let fields = [
        ("scenario".to_string(), serde_json::to_value(cfg.scenario).expect("enum serializes")),
        ("seed".to_string(), json!(cfg.seed.unwrap_or(seed))),
        ("replications".to_string(), json!(cfg.replications)),
        ("alpha".to_string(), json!(cfg.alpha)),
        ("n".to_string(), json!(cfg.n)),
        ("m".to_string(), json!(cfg.m)),
        ("p".to_string(), json!(cfg.p)),
        ("methods".to_string(), serde_json::to_value(&study.summary).expect("summary serializes")),
        ("failures".to_string(), json!(study.failures)),
    ];
    Ok(to_json(&envelope("simulate", fields)))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
