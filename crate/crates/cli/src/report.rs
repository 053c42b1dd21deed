//! Machine-readable run reports.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value <= tol`.
    AtMost,
    /// `value >= tol`.
    AtLeast,
    /// `value == tol`.
    Equals,
}

/// One verified property.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub invariant: String,
    pub value: f64,
    pub tol: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, invariant: &str, value: f64, tol: f64) -> Self {
        Self::new(name, invariant, value, tol, Relation::AtMost)
    }

    pub fn at_least(name: &str, invariant: &str, value: f64, tol: f64) -> Self {
        Self::new(name, invariant, value, tol, Relation::AtLeast)
    }

    pub fn equals(name: &str, invariant: &str, value: f64, target: f64) -> Self {
        Self::new(name, invariant, value, target, Relation::Equals)
    }

    fn new(name: &str, invariant: &str, value: f64, tol: f64, relation: Relation) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= tol,
            Relation::AtLeast => value >= tol,
            Relation::Equals => value == tol,
        };
        Self { name: name.into(), invariant: invariant.into(), value, tol, relation, pass }
    }
}

/// Results of one task at one truncation order.
#[derive(Clone, Debug, Serialize)]
pub struct OrderResult {
    pub n: usize,
    pub checks: Vec<Check>,
    pub metrics: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl OrderResult {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub task: String,
    pub results: Vec<OrderResult>,
    /// Least-squares slope of `log(value)` against `log(N)` per check name.
    pub slopes: BTreeMap<String, f64>,
    pub pass: bool,
}

impl TaskReport {
    pub fn new(index: usize, task: &str, results: Vec<OrderResult>) -> Self {
        let slopes = convergence_slopes(&results);
        let pass = results.iter().all(OrderResult::pass);
        Self { index, task: task.into(), results, slopes, pass }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskReport>,
    pub pass: bool,
}

/// Slopes over orders where a check has a positive finite value. Checks
/// that appear at fewer than two orders get no slope.
pub fn convergence_slopes(results: &[OrderResult]) -> BTreeMap<String, f64> {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in results {
        for c in &r.checks {
            if c.value > 0.0 && c.value.is_finite() {
                series.entry(c.name.clone()).or_default().push(((r.n as f64).ln(), c.value.ln()));
            }
        }
    }
    series
        .into_iter()
        .filter(|(_, pts)| pts.len() >= 2)
        .map(|(k, pts)| {
            let m = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            (k, if sxx > 0.0 { sxy / sxx } else { 0.0 })
        })
        .collect()
}
