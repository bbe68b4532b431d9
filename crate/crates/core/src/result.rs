use serde::Serialize;

/// Reference distribution used to turn a statistic into a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NullDist {
    StandardNormal,
    F { d1: f64, d2: f64 },
    ChiSquare { df: f64 },
    ScaledChiSquare { c: f64, d: f64 },
    ExtremeValueI,
    Permutation { count: usize },
    Empirical { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    pub null_dist: NullDist,
    pub diagnostics: Vec<(String, f64)>,
    /// Set by procedures whose rejection rule is not `p < alpha`
    /// (threshold or cutoff based); holds the decision at the level they were run with.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<bool>,
}

impl TestResult {
    pub fn new(method: &str, statistic: f64, p_value: f64, null_dist: NullDist) -> Self {
        Self {
            method: method.to_string(),
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            null_dist,
            diagnostics: Vec::new(),
            decision: None,
        }
    }

    pub fn with_diag(mut self, name: &str, value: f64) -> Self {
        self.diagnostics.push((name.to_string(), value));
        self
    }

    pub fn diag(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// Decision at level `alpha`; threshold-based procedures report their own.
    pub fn reject(&self, alpha: f64) -> bool {
        self.decision.unwrap_or(self.p_value < alpha)
    }
}
