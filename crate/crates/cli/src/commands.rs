use crate::args::{BandedArgs, CovarianceArgs, DirmultArgs, MeanArgs, MultinomialArgs};
use crate::methods::{self, MeanOptions};
use crate::{envelope, to_json, CliError, CliResult};
use hidim::covariance::banded_covariance;
use hidim::discrete::{count_rows, dirmult_fit, CountVector, DirMultFitConfig, DirMultInit};
use hidim::{DataMatrix, RngStream, TestResult, TwoSample};
use serde_json::{json, Map, Value};
use std::path::Path;

fn read(path: &Path, header: bool) -> CliResult<DataMatrix> {
    DataMatrix::read_csv(path, header).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn test_json(command: &str, r: &TestResult, params: Map<String, Value>) -> String {
    let diagnostics: Map<String, Value> = r.diagnostics.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut fields = vec![
        ("method".to_string(), json!(r.method)),
        ("statistic".to_string(), json!(r.statistic)),
        ("p_value".to_string(), json!(r.p_value)),
        ("null_dist".to_string(), serde_json::to_value(r.null_dist).expect("null dist serializes")),
    ];
    if let Some(d) = r.decision {
        fields.push(("decision".to_string(), json!(d)));
    }
    fields.push(("params".to_string(), Value::Object(params)));
    fields.push(("diagnostics".to_string(), Value::Object(diagnostics)));
    to_json(&envelope(command, fields))
}

fn size_params(params: &mut Map<String, Value>, seed: u64, n: usize, m: Option<usize>, p: usize) {
    params.insert("seed".into(), json!(seed));
    params.insert("n".into(), json!(n));
    if let Some(m) = m {
        params.insert("m".into(), json!(m));
    }
    params.insert("p".into(), json!(p));
}

pub fn test_mean(a: &MeanArgs, seed: u64) -> CliResult<String> {
    methods::check_mean_method(&a.method)?;
    let x = read(&a.files.x, a.files.header)?;
    let ypath = a.files.y.as_ref().ok_or_else(|| CliError::input("mean tests need --y"))?;
    let y = read(ypath, a.files.header)?;
    let s = TwoSample::new(x, y)?;
    let opts = MeanOptions {
        alpha: a.alpha,
        permutations: a.permutations,
        projections: a.projections,
        null_reps: a.null_reps,
        projection_kind: a.projection_kind.clone(),
        k: a.k,
        order: a.order,
        tau0: a.tau0,
        clx_precision: a.clx_precision.clone(),
    };
    let r = methods::run_mean(&a.method, &s, &opts, &RngStream::new(seed, 0))?;
    let mut params = opts.describe(&a.method);
    size_params(&mut params, seed, s.n(), Some(s.m()), s.p());
    Ok(test_json("test mean", &r, params))
}

pub fn test_covariance(a: &CovarianceArgs, seed: u64) -> CliResult<String> {
    methods::check_covariance_method(&a.method)?;
    let x = read(&a.files.x, a.files.header)?;
    let y = match &a.files.y {
        Some(p) => Some(read(p, a.files.header)?),
        None => None,
    };
    let r = methods::run_covariance(&a.method, &x, y.as_ref(), a.permutations, &RngStream::new(seed, 0))?;
    let mut params = Map::new();
    if matches!(a.method.as_str(), "schott" | "li-chen") {
        params.insert("permutations".into(), json!(a.permutations));
    }
    let m = y.as_ref().filter(|_| methods::covariance_is_two_sample(&a.method)).map(|y| y.n());
    size_params(&mut params, seed, x.n(), m, x.p());
    Ok(test_json("test covariance", &r, params))
}

/// Column sums of a count file, so one row or many rows both work.
fn read_counts(path: &Path, header: bool) -> CliResult<CountVector> {
    let rows = count_rows(&read(path, header)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut total = vec![0u64; rows[0].p()];
    for r in &rows {
        for (t, c) in total.iter_mut().zip(r.counts()) {
            *t += c;
        }
    }
    Ok(CountVector::new(total))
}

pub fn test_multinomial(a: &MultinomialArgs, seed: u64) -> CliResult<String> {
    let x = read_counts(&a.x, a.header)?;
    let y = read_counts(&a.y, a.header)?;
    let r = methods::run_multinomial(&a.method, &x, &y, a.permutations, a.df, &RngStream::new(seed, 0))?;
    let mut params = Map::new();
    params.insert("seed".into(), json!(seed));
    params.insert("n".into(), json!(x.total()));
    params.insert("m".into(), json!(y.total()));
    params.insert("p".into(), json!(x.p()));
    if matches!(a.method.as_str(), "chan1" | "chan2") {
        params.insert("permutations".into(), json!(a.permutations));
    }
    if let Some(df) = a.df {
        params.insert("df".into(), json!(df));
    }
    Ok(test_json("test multinomial", &r, params))
}

pub fn fit_dirmult(a: &DirmultArgs) -> CliResult<String> {
    let m = read(&a.counts, a.header)?;
    let counts = count_rows(&m).map_err(|e| CliError::input(format!("{}: {e}", a.counts.display())))?;
    let init = match a.init.as_str() {
        "ronning" => DirMultInit::Ronning,
        "mom" => DirMultInit::Mom,
        other => return Err(CliError::input(format!("unknown init '{other}' (expected ronning or mom)"))),
    };
    let fit = dirmult_fit(&counts, &DirMultFitConfig { init, tol: a.tol, max_iter: a.max_iter })?;
    let mut fields = match serde_json::to_value(&fit).expect("fit serializes") {
        Value::Object(m) => m,
        _ => unreachable!("struct serializes to an object"),
    };
    fields.insert("tol".into(), json!(a.tol));
    fields.insert("vectors".into(), json!(counts.len()));
    Ok(to_json(&envelope("fit dirmult", fields)))
}

pub fn fit_banded(a: &BandedArgs, seed: u64) -> CliResult<String> {
    let x = read(&a.x, a.header)?;
    let k_max = a.k_max.unwrap_or(x.p()).min(x.p());
    let ks: Vec<usize> = (1..=k_max).collect();
    let est = banded_covariance(&x, &ks, a.folds, &RngStream::new(seed, 0))?;
    let curve: Vec<Value> = est.cv_risk_curve.iter().map(|(k, r)| json!({"k": k, "risk": r})).collect();
    let matrix: Vec<Vec<f64>> = est.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
    let fields = [
        ("band_width".to_string(), json!(est.band_width)),
        ("cv_risk_curve".to_string(), Value::Array(curve)),
        ("matrix".to_string(), json!(matrix)),
        ("folds".to_string(), json!(a.folds)),
        ("seed".to_string(), json!(seed)),
    ];
    Ok(to_json(&envelope("fit banded", fields)))
}
