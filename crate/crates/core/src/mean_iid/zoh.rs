use super::hotelling_t2;
use crate::data::TwoSample;
use crate::error::{invalid, Result};
use crate::result::TestResult;
use crate::special::f_upper_quantile;

/// Bayes factor BF₁₀ for dimension `p` (or projected dimension k) at the
/// F-scaled Hotelling statistic `t2`, with η = nm/((n+m)τ₀).
pub fn zoh_bf10(t2: f64, n: usize, m: usize, p: usize, eta: f64) -> f64 {
    let pf = p as f64;
    let nu = (n + m) as f64 - pf - 1.0;
    let num = 1.0 + pf * t2 / ((1.0 + eta) * nu);
    let den = 1.0 + pf * t2 / nu;
    (-(pf / 2.0) * (1.0 + eta).ln() - ((n + m) as f64 - 1.0) / 2.0 * (num / den).ln()).exp()
}

/// Rejection threshold for BF₁₀ obtained by translating the Hotelling
/// rejection region at level α.
pub fn zoh_threshold(n: usize, m: usize, p: usize, alpha: f64) -> f64 {
    let pf = p as f64;
    let total = (n + m) as f64;
    let nm = (n * m) as f64;
    let nu = total - pf - 1.0;
    let f = f_upper_quantile(alpha, pf, nu);
    let c_n = pf * f / (pf * f + nu);
    let tau_a = nm / (total * f - 1.0);
    let tau_star = nm / (total * tau_a);
    tau_star.powf(-pf / 2.0) * (1.0 - (tau_star - 1.0) / tau_star * c_n)
}

pub fn zoh_bayes_factor(s: &TwoSample, tau0: f64, alpha: f64) -> Result<TestResult> {
    if !(tau0 > 0.0) {
        return invalid(format!("tau0 must be positive, got {tau0}"));
    }
    let hot = hotelling_t2(s)?;
    let (n, m, p) = (s.n(), s.m(), s.p());
    let eta = (n * m) as f64 / ((n + m) as f64 * tau0);
    let bf = zoh_bf10(hot.statistic, n, m, p, eta);
    let threshold = zoh_threshold(n, m, p, alpha);
    let mut r = TestResult::new("zoh", bf, hot.p_value, hot.null_dist)
        .with_diag("hotelling_t2", hot.statistic)
        .with_diag("eta", eta)
        .with_diag("threshold", threshold);
    r.decision = Some(bf > threshold);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_statistic() {
        let eta = 0.7;
        let bf = zoh_bf10(0.0, 20, 25, 4, eta);
        assert!((bf - (1.0f64 + eta).powf(-2.0)).abs() < 1e-14);
    }

    #[test]
    fn increasing_in_t2() {
        for &(n, m, p, eta) in &[(20, 25, 4, 0.5), (50, 50, 10, 3.0), (10, 12, 1, 0.01)] {
            let mut prev = zoh_bf10(0.0, n, m, p, eta);
            for i in 1..200 {
                let bf = zoh_bf10(i as f64 * 0.1, n, m, p, eta);
                assert!(bf > prev);
                prev = bf;
            }
        }
    }
}
