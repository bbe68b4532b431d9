//! `scan-k`: figure-ready p-value curves of the projected Hotelling test.

use crate::args::ScanArgs;
use crate::{CliError, CliResult};
use hidim::projection::{max_scan_k, scan_k};
use hidim::{DataMatrix, RngStream, TwoSample};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Diagonal covariance of the generated samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanSigma {
    Identity,
    /// Variances drawn once per stream from Unif(low, high).
    DiagUniform {
        low: f64,
        high: f64,
    },
}

/// x ~ N(0, Σ), y ~ N(δ𝟙, Σ). The variances and noise come from `stream`
/// alone, so samples that differ only in δ share their draws.
pub fn shifted_sample(n: usize, m: usize, p: usize, delta: f64, sigma: ScanSigma, stream: &RngStream) -> TwoSample {
    let mut r = stream.rng();
    let sd: Vec<f64> = match sigma {
        ScanSigma::Identity => vec![1.0; p],
        ScanSigma::DiagUniform { low, high } => (0..p).map(|_| r.gen_range(low..=high).sqrt()).collect(),
    };
    let mut draw = |rows: usize, shift: f64| {
        DMatrix::from_fn(rows, p, |_, k| {
            let z: f64 = StandardNormal.sample(&mut r);
            shift + sd[k] * z
        })
    };
    let x = draw(n, 0.0);
    let y = draw(m, delta);
    TwoSample::from_matrices(x, y).expect("generated values are finite")
}

struct Column {
    name: String,
    sample: TwoSample,
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

pub fn cmd_scan_k(a: &ScanArgs, seed: u64) -> CliResult<String> {
    let columns: Vec<Column> = if let (Some(x), Some(y)) = (&a.x, &a.y) {
        let read = |p: &std::path::Path| {
            DataMatrix::read_csv(p, a.header).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
        };
        vec![Column { name: "p_value".into(), sample: TwoSample::new(read(x)?, read(y)?)? }]
    } else {
        let sigma = match a.sigma.as_str() {
            "identity" => ScanSigma::Identity,
            "diag_uniform" => {
                if !(a.sigma_low > 0.0 && a.sigma_low <= a.sigma_high) {
                    return Err(CliError::input("need 0 < sigma-low <= sigma-high"));
                }
                ScanSigma::DiagUniform { low: a.sigma_low, high: a.sigma_high }
            }
            other => {
                return Err(CliError::input(format!("unknown sigma '{other}' (expected identity or diag_uniform)")))
            }
        };
        if a.p == 0 || a.n.iter().any(|&n| n < 2) {
            return Err(CliError::input("need p >= 1 and every n >= 2"));
        }
        let mut cols = Vec::new();
        for (i, &n) in a.n.iter().enumerate() {
            let m = a.m.unwrap_or_else(|| ((n as f64) * a.m_ratio).round() as usize);
            if m < 2 {
                return Err(CliError::input(format!("second sample size {m} is below 2")));
            }
            let stream = RngStream::new(seed, i as u64);
            for &d in &a.delta {
                let name =
                    if a.n.len() > 1 { format!("n{n}_delta{}", fmt_num(d)) } else { format!("delta{}", fmt_num(d)) };
                cols.push(Column { name, sample: shifted_sample(n, m, a.p, d, sigma, &stream) });
            }
        }
        cols
    };

    let limits: Vec<usize> = columns.iter().map(|c| max_scan_k(&c.sample)).collect::<Result<_, _>>()?;
    let top = *limits.iter().max().expect("at least one column");
    let k_max = a.k_max.unwrap_or(top);
    if a.k_min == 0 || a.k_min > k_max || k_max > top {
        return Err(CliError::input(format!("k range {}..={k_max} must lie within 1..={top}", a.k_min)));
    }
    let curves: Vec<Vec<Option<f64>>> = columns
        .iter()
        .zip(&limits)
        .map(|(c, &lim)| {
            let ks: Vec<usize> = (a.k_min..=k_max.min(lim)).collect();
            let pts = if ks.is_empty() { Vec::new() } else { scan_k(&c.sample, &ks)? };
            let mut out = vec![None; k_max - a.k_min + 1];
            for pt in pts {
                out[pt.k - a.k_min] = Some(pt.p_value);
            }
            Ok(out)
        })
        .collect::<hidim::Result<_>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string()];
    header.extend(columns.iter().map(|c| c.name.clone()));
    w.write_record(&header).map_err(|e| CliError::input(e.to_string()))?;
    for (row, k) in (a.k_min..=k_max).enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(curves.iter().map(|c| c[row].map(fmt_num).unwrap_or_default()));
        w.write_record(&rec).map_err(|e| CliError::input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}
