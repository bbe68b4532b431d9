//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use common::oracles::*;
use common::*;
use hidim::covariance::li_chen_parts;
use hidim::dependent::{apr_test, generate_ma_process, raw_traces, theta_matrix, StationaryProcessSpec};
use hidim::discrete::*;
use hidim::mean_iid::*;
use hidim::projection::*;
use hidim::stats::{kendall_tau, mean_se};
use hidim::{RngStream, TwoSample};
use hidim_cli::scan::{shifted_sample, ScanSigma};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::process::Command;
use std::time::Instant;

const FIG_SIGMA: ScanSigma = ScanSigma::DiagUniform { low: 2.0, high: 3.0 };

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// AND of several checks, keeping every detail.
fn all(parts: Vec<Verdict>) -> Verdict {
    let pass = parts.iter().all(|v| v.pass);
    let detail = parts.iter().map(|v| v.detail.as_str()).collect::<Vec<_>>().join("; ");
    verdict(pass, detail)
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn ac1_size_calibration() -> Verdict {
    let (n, p, reps) = (50, 200, 2000);
    let tests: [(&str, fn(&TwoSample) -> hidim::Result<hidim::TestResult>); 4] =
        [("bs", bai_saranadasa), ("cq", chen_qin), ("sd", |s| srivastava_du(s, false)), ("pa", park_ayyala)];
    let hits: Vec<[bool; 4]> = {
        use rayon::prelude::*;
        (0..reps as u64)
            .into_par_iter()
            .map(|i| {
                let s = shifted_sample(n, n, p, 0.0, ScanSigma::Identity, &RngStream::new(101, i));
                tests.map(|(_, f)| f(&s).unwrap().reject(0.05))
            })
            .collect()
    };
    all(tests
        .iter()
        .enumerate()
        .map(|(j, (name, _))| {
            let size = hits.iter().filter(|h| h[j]).count() as f64 / reps as f64;
            verdict(in_range(size, 0.03, 0.08), format!("{name} size {size:.4}"))
        })
        .collect())
}

/// Smallest rejecting k, with "never" ordered above every k.
fn first_reject(s: &TwoSample, k_max: usize) -> usize {
    let scan = scan_k(s, &(1..=k_max).collect::<Vec<_>>()).unwrap();
    smallest_rejecting_k(&scan, 0.05).unwrap_or(usize::MAX)
}

fn ac2_figure_one() -> Verdict {
    use rayon::prelude::*;
    let runs = 100;
    let ks: Vec<[usize; 3]> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let st = RngStream::new(102, i);
            [0.2, 0.4, 1.0].map(|d| first_reject(&shifted_sample(100, 100, 50, d, FIG_SIGMA, &st), 50))
        })
        .collect();
    let monotone = ks.iter().filter(|k| k[0] >= k[1] && k[1] >= k[2]).count() as f64 / runs as f64;
    let worst = ks.iter().map(|k| k[2]).max().unwrap();
    let median = {
        let mut v: Vec<usize> = ks.iter().map(|k| k[2]).collect();
        v.sort_unstable();
        v[runs / 2]
    };
    all(vec![
        verdict(monotone >= 0.9, format!("non-increasing in {:.0}% of runs", 100.0 * monotone)),
        verdict(worst <= 10, format!("delta=1 smallest k: median {median}, max {worst}")),
    ])
}

fn ac3_figure_two() -> Verdict {
    use rayon::prelude::*;
    let cases = [(10usize, 100u64), (100, 50)];
    all(cases
        .iter()
        .map(|&(n, runs)| {
            let taus: Vec<f64> = (0..runs)
                .into_par_iter()
                .map(|i| {
                    let s = shifted_sample(n, 2 * n, 500, 1.0, FIG_SIGMA, &RngStream::new(103 + n as u64, i));
                    let ks: Vec<usize> = (1..=max_scan_k(&s).unwrap()).collect();
                    let scan = scan_k(&s, &ks).unwrap();
                    let kf: Vec<f64> = scan.iter().map(|pt| pt.k as f64).collect();
                    let pv: Vec<f64> = scan.iter().map(|pt| pt.p_value).collect();
                    kendall_tau(&kf, &pv)
                })
                .collect();
            let frac = taus.iter().filter(|&&t| t > 0.0).count() as f64 / runs as f64;
            let (mean, _) = mean_se(&taus);
            verdict(frac >= 0.9, format!("n={n}: tau>0 in {:.0}% of {runs} runs (mean tau {mean:.2})", 100.0 * frac))
        })
        .collect())
}

fn ac4_oracles() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for seed in 0..60u64 {
        let mut r = RngStream::new(104, seed).rng();
        let n = r.gen_range(4..=6usize);
        let m = r.gen_range(4..=6usize);
        let p = r.gen_range(1..=4usize);
        let x = gaussian(n, p, &mut r).add_scalar(r.gen_range(-1.0..1.0));
        let y = gaussian(m, p, &mut r) * r.gen_range(0.5..2.0);
        let s = TwoSample::from_matrices(x.clone(), y.clone()).unwrap();

        let t = cq_trace_estimates(&s).unwrap();
        let (a, b, c) = brute_cq(&s);
        let mut errs = vec![t.tr_s1_sq - a, t.tr_s2_sq - b, t.tr_s1_s2 - c];

        let lc = li_chen_parts(&s).unwrap();
        errs.extend([
            lc.a1 - brute_within(&rows(&x)),
            lc.a2 - brute_within(&rows(&y)),
            lc.c - brute_cross(&rows(&x), &rows(&y)),
        ]);

        // leave-two-out variances inside PA need five rows per group
        if n >= 5 && m >= 5 {
            let pa = park_ayyala_parts(&s).unwrap();
            let bp = brute_pa(&s);
            errs.extend([
                pa.u_n - bp.u_n,
                pa.tr_r1_sq - bp.tr_r1_sq,
                pa.tr_r2_sq - bp.tr_r2_sq,
                pa.tr_r1_r2 - bp.tr_r1_r2,
            ]);
        }
        worst = errs.iter().fold(worst, |w, e| w.max(e.abs()));
        cases += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    all(vec![
        verdict(worst <= 1e-10, format!("{cases} cases, max abs error {worst:.2e}")),
        verdict(secs <= 60.0, format!("{secs:.1}s")),
    ])
}

fn ac5_levin() -> Verdict {
    let mut r = RngStream::new(105, 0).rng();
    let (mut err, mut s_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let p = r.gen_range(2..=4usize);
        let n = r.gen_range(1..=12u64);
        let w: Vec<f64> = (0..p).map(|_| r.gen_range(0.05..1.0)).collect();
        let pi = MultinomialParams::from_weights(&w).unwrap();
        let a: Vec<u64> = (0..p).map(|_| r.gen_range(0..=n)).collect();
        let brute: f64 = compositions(n, p)
            .iter()
            .filter(|x| x.iter().zip(&a).all(|(xi, ai)| xi <= ai))
            .map(|x| multinomial_logpmf(&CountVector::new(x.clone()), &pi).unwrap().exp())
            .sum();
        let f = levin_cdf(&a, n, &pi, None).unwrap();
        err = err.max((f - brute).abs());
        for s in [0.5 * n as f64, 2.0 * n as f64, r.gen_range(0.2..5.0) * n as f64] {
            s_err = s_err.max((levin_cdf(&a, n, &pi, Some(s)).unwrap() - f).abs());
        }
    }
    all(vec![
        verdict(err <= 1e-10, format!("vs enumeration {err:.2e}")),
        verdict(s_err <= 1e-9, format!("s-invariance {s_err:.2e}")),
    ])
}

fn ma_spec(p: usize, order: usize) -> StationaryProcessSpec {
    let coef = (0..=order)
        .map(|j| {
            let s = 0.6f64.powi(j as i32);
            DMatrix::from_fn(p, p, |r, c| {
                if r == c {
                    s
                } else if c == r + 1 {
                    0.3 * s
                } else {
                    0.0
                }
            })
        })
        .collect();
    StationaryProcessSpec::new(DVector::zeros(p), coef).unwrap()
}

fn ac6_dependent() -> Verdict {
    use rayon::prelude::*;
    let (p, n, lags, reps) = (5, 40, 5, 5000u64);
    let mut parts = Vec::new();
    for order in 0..=1 {
        let spec = ma_spec(p, order);
        let gamma = DVector::from_fn(lags + 1, |a, _| spec.autocovariance(a).trace());
        let expected = theta_matrix(n, lags).unwrap() * gamma;
        let samples: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|i| {
                raw_traces(&generate_ma_process(&spec, n, &RngStream::new(106 + order as u64, i)).unwrap(), lags)
                    .unwrap()
            })
            .collect();
        let worst = (0..=lags)
            .map(|a| {
                let col: Vec<f64> = samples.iter().map(|v| v[a]).collect();
                let (mean, se) = mean_se(&col);
                (mean - expected[a]).abs() / se
            })
            .fold(0.0, f64::max);
        parts.push(verdict(worst <= 4.0, format!("MA({order}) max |z| {worst:.2}")));
    }
    let size = rate(1000, |i| {
        let st = RngStream::new(108, i);
        let x = generate_ma_process(&ma_spec(100, 1), 60, &st.derive(0)).unwrap();
        let y = generate_ma_process(&ma_spec(100, 1), 60, &st.derive(1)).unwrap();
        apr_test(&TwoSample::new(x, y).unwrap(), 1).unwrap().reject(0.05)
    });
    parts.push(verdict(in_range(size, 0.02, 0.10), format!("APR size {size:.3}")));
    all(parts)
}

fn ac7_dirmult() -> Verdict {
    let mut parts = Vec::new();

    let small = DirMultParams::new(vec![1.2, 3.0, 0.7, 2.5]).unwrap();
    let counts = dirmult_sample(&small, &[20, 35, 18, 40, 25, 30], &RngStream::new(107, 0));
    let theta = [1.0, 2.5, 0.9, 3.1];
    let g = dirmult_gradient(&counts, &theta).unwrap();
    let mut grad_err: f64 = 0.0;
    for k in 0..4 {
        let h = 1e-5 * theta[k];
        let (mut up, mut dn) = (theta, theta);
        up[k] += h;
        dn[k] -= h;
        let fd = (dirmult_loglik(&counts, &up).unwrap() - dirmult_loglik(&counts, &dn).unwrap()) / (2.0 * h);
        grad_err = grad_err.max((fd - g[k]).abs() / g[k].abs().max(1.0));
    }
    parts.push(verdict(grad_err <= 1e-5, format!("gradient rel err {grad_err:.1e}")));

    let params = DirMultParams::new((1..=10).map(|k| 0.5 + k as f64 * 0.3).collect()).unwrap();
    let counts = dirmult_sample(&params, &[40; 30], &RngStream::new(107, 1));
    let (d, c) = dirmult_hessian_parts(&counts, params.theta()).unwrap();
    let dense = DMatrix::from_fn(10, 10, |i, j| if i == j { d[i] } else { 0.0 } + c);
    let slow = dense.try_inverse().unwrap();
    let inv_err = (rank_one_inverse(&d, c).unwrap() - &slow).abs().max() / slow.abs().max();
    parts.push(verdict(inv_err <= 1e-8, format!("rank-one inverse err {inv_err:.1e}")));

    let truth = [2.0, 5.0, 10.0];
    let counts = dirmult_sample(&DirMultParams::new(truth.to_vec()).unwrap(), &[100; 500], &RngStream::new(107, 2));
    let fit = dirmult_fit(&counts, &DirMultFitConfig::default()).unwrap();
    let rec = (0..3).map(|k| (fit.theta[k] / truth[k] - 1.0).abs()).fold(0.0, f64::max);
    parts.push(verdict(rec <= 0.15, format!("recovery max rel err {rec:.3}")));

    let mut r = RngStream::new(107, 3).rng();
    let theta: Vec<f64> = (0..6).map(|_| r.gen_range(0.5..5.0)).collect();
    let mom = dirmult_moments(&DirMultParams::new(theta).unwrap(), 50).unwrap();
    let block = mom.covariance.view((0, 0), (5, 5)).into_owned();
    let miller = (block * &mom.precision - DMatrix::identity(5, 5)).abs().max();
    parts.push(verdict(miller <= 1e-8, format!("cov*prec - I {miller:.1e}")));
    all(parts)
}

fn ac8_raptt() -> Verdict {
    let cfg = RapttConfig { n_projections: 50, null_reps: 200, alpha: 0.05, ..Default::default() };
    let size = rate(500, |i| {
        let s = shifted_sample(30, 30, 300, 0.0, ScanSigma::Identity, &RngStream::new(109, i));
        raptt(&s, &cfg, &RngStream::new(110, i)).unwrap().reject(0.05)
    });
    let power = rate(200, |i| {
        let s = shifted_sample(30, 30, 300, 0.5, ScanSigma::Identity, &RngStream::new(111, i));
        raptt(&s, &cfg, &RngStream::new(112, i)).unwrap().reject(0.05)
    });
    all(vec![
        verdict((size - 0.05).abs() <= 0.02, format!("size {size:.3} (500 reps)")),
        verdict(power >= 0.9, format!("power {power:.3} (200 reps)")),
    ])
}

fn ac9_sparse_multinomial() -> Verdict {
    use rayon::prelude::*;
    let pi = MultinomialParams::uniform(500);
    let reps = 1000u64;
    let pp = MultinomialTestConfig::new(MultinomialMethod::Pp);
    let pe = MultinomialTestConfig::new(MultinomialMethod::Pearson);
    let hits: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let st = RngStream::new(113, i);
            let mut r = st.rng();
            let x = multinomial_sample(300, &pi, &mut r);
            let y = multinomial_sample(300, &pi, &mut r);
            (
                multinomial_two_sample(&x, &y, &pp, &st.derive(1)).unwrap().reject(0.05),
                multinomial_two_sample(&x, &y, &pe, &st.derive(1)).unwrap().reject(0.05),
            )
        })
        .collect();
    let size_pp = hits.iter().filter(|h| h.0).count() as f64 / reps as f64;
    let size_pe = hits.iter().filter(|h| h.1).count() as f64 / reps as f64;
    all(vec![
        verdict(in_range(size_pp, 0.02, 0.09), format!("pp size {size_pp:.3}")),
        verdict(!in_range(size_pe, 0.03, 0.08), format!("pearson size {size_pe:.3}")),
    ])
}

fn ac10_invariance() -> Verdict {
    let tol = 1e-10;
    let close = |a: f64, b: f64| rel_close(a, b, tol);
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut check = |name: &str, ok: bool| {
        checks += 1;
        if !ok {
            failures.push(name.to_string());
        }
    };
    for seed in 0..5u64 {
        let mut r = RngStream::new(114, seed).rng();
        let s = null_pair(14, 16, 8, 0.4, &RngStream::new(115, seed));

        let u = random_orthogonal(8, &mut r);
        let t = apply_right(&s, &u);
        check("bs orthogonal", close(bai_saranadasa(&s).unwrap().statistic, bai_saranadasa(&t).unwrap().statistic));
        check("cq orthogonal", close(chen_qin(&s).unwrap().statistic, chen_qin(&t).unwrap().statistic));

        let d = DMatrix::from_diagonal(&DVector::from_fn(8, |_, _| r.gen_range(0.1..10.0)));
        let t = apply_right(&s, &d);
        check(
            "sd scale",
            close(srivastava_du(&s, false).unwrap().statistic, srivastava_du(&t, false).unwrap().statistic),
        );
        check("pa scale", close(park_ayyala(&s).unwrap().statistic, park_ayyala(&t).unwrap().statistic));
        check("u_n scale", close(park_ayyala_parts(&s).unwrap().u_n, park_ayyala_parts(&t).unwrap().u_n));

        let v = DVector::from_fn(8, |_, _| r.gen_range(-5.0..5.0));
        let t = shift(&s, &v);
        let rng = RngStream::new(116, seed);
        let stats = |s: &TwoSample| {
            [
                hotelling_t2(s).unwrap().statistic,
                bai_saranadasa(s).unwrap().statistic,
                chen_qin(s).unwrap().statistic,
                srivastava_du(s, false).unwrap().statistic,
                srivastava_du(s, true).unwrap().statistic,
                park_ayyala(s).unwrap().statistic,
                dempster(s).unwrap().statistic,
                pct(s, None).unwrap().statistic,
                clx_max_test(s, &ClxPrecision::DiagonalInverse, 0.05).unwrap().statistic,
                chung_fraser(s, ChungFraserScale::StdDev, 19, &rng).unwrap().statistic,
                zoh_bayes_factor(s, 1.0, 0.05).unwrap().statistic,
                projected_hotelling(s, 5).unwrap().statistic,
                apr_test(s, 1).unwrap().statistic,
            ]
        };
        for (j, (a, b)) in stats(&s).into_iter().zip(stats(&t)).enumerate() {
            check(&format!("location #{j}"), close(a, b));
        }

        let wide = null_pair(20, 18, 40, 0.2, &RngStream::new(117, seed));
        let proj = generate_projection(
            ProjectionSpec { kind: ProjectionKind::Sign, k: 12, stream: RngStream::new(118, seed) },
            40,
        )
        .unwrap();
        let a = gaussian(12, 12, &mut r);
        let moved = ProjectionMatrix { values: &a * &proj.values, spec: proj.spec };
        let base = t2_random_projection(&wide, &proj).unwrap().statistic;
        let after = t2_random_projection(&wide, &moved).unwrap().statistic;
        // A is a random dense matrix, so its conditioning limits the attainable agreement
        check("projection R -> AR", rel_close(base, after, 1e-8));
    }
    let detail =
        if failures.is_empty() { format!("{checks} checks") } else { format!("failed: {}", failures.join(", ")) };
    verdict(failures.is_empty(), detail)
}

fn run_cli(args: &[&str], threads: &str) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_hidim"))
        .args(args)
        .args(["--threads", threads])
        .env_remove("HIDIM_THREADS")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn ac11_determinism() -> Verdict {
    let dir = tempfile::TempDir::new().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let write_matrix = |name: &str, m: &DMatrix<f64>| {
        let text: String =
            m.row_iter().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n").collect();
        std::fs::write(path(name), text).unwrap();
    };
    let s = null_pair(15, 15, 60, 0.3, &RngStream::new(119, 0));
    write_matrix("x.csv", s.x.values());
    write_matrix("y.csv", s.y.values());
    std::fs::write(path("cx.csv"), "5,3,0,9,2,1,1,0\n").unwrap();
    std::fs::write(path("cy.csv"), "2,6,1,4,0,0,3,1\n").unwrap();
    std::fs::write(
        path("sim.toml"),
        "scenario = \"mean_iid\"\nn = 15\nm = 15\np = 30\nreplications = 40\nmethods = [\"cq\", \"chung-fraser\", \"raptt\"]\n[options]\npermutations = 49\nprojections = 10\nnull_reps = 60\n",
    )
    .unwrap();
    let (x, y, cx, cy, sim) = (path("x.csv"), path("y.csv"), path("cx.csv"), path("cy.csv"), path("sim.toml"));
    let invocations: Vec<Vec<&str>> = vec![
        vec!["test", "mean", "--method", "raptt", "--x", &x, "--y", &y, "--seed", "3"],
        vec!["test", "mean", "--method", "chung-fraser", "--x", &x, "--y", &y, "--seed", "3"],
        vec!["test", "covariance", "--method", "schott", "--x", &x, "--y", &y, "--permutations", "99"],
        vec!["test", "covariance", "--method", "li-chen", "--x", &x, "--y", &y, "--permutations", "99"],
        vec!["test", "multinomial", "--method", "chan1", "--x", &cx, "--y", &cy],
        vec!["simulate", "--config", &sim, "--seed", "11"],
        vec!["scan-k", "--n", "20", "--p", "30", "--delta", "0,0.5", "--seed", "4"],
        vec!["fit", "banded", "--x", &x, "--folds", "3", "--k-max", "6"],
    ];
    let mut bad = Vec::new();
    for args in &invocations {
        let base = run_cli(args, "1");
        let same = ["2", "4", "8"].iter().all(|t| run_cli(args, t) == base);
        if base.0 != 0 || !same {
            bad.push(args[..2].join(" "));
        }
    }
    let detail = if bad.is_empty() {
        format!("{} invocations identical at 1/2/4/8 threads", invocations.len())
    } else {
        format!("differs: {}", bad.join(", "))
    };
    verdict(bad.is_empty(), detail)
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("AC1 size calibration", ac1_size_calibration),
        ("AC2 figure-1 replica", ac2_figure_one),
        ("AC3 figure-2 replica", ac3_figure_two),
        ("AC4 oracle equivalence", ac4_oracles),
        ("AC5 Levin CDF", ac5_levin),
        ("AC6 autocovariance debiasing", ac6_dependent),
        ("AC7 Dirichlet-multinomial", ac7_dirmult),
        ("AC8 RAPTT", ac8_raptt),
        ("AC9 sparse multinomial", ac9_sparse_multinomial),
        ("AC10 invariance", ac10_invariance),
        ("AC11 CLI determinism", ac11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
