//! Bound checks: distribution recovery, likelihood convergence, and
//! runtime/memory complexity-class verification.

mod complexity;
mod performance;
mod reliability;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use complexity::{fit_complexity_class, ComplexityClass, ComplexityFit};
pub use performance::{performance_bound_check, Resource};
pub use reliability::{
    convergence_check, convergence_outcome, distribution_recovery_check, distribution_recovery_outcome, kl_divergence,
    KL_FLOOR,
};

/// Thresholds for every check. None of them come with the theory; these are
/// the documented defaults and they are echoed on every label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Distribution recovery passes if the max table-wise KL is below this.
    pub kl_threshold: f64,
    /// Convergence passes if the final gradient L2 norm is below this.
    pub grad_norm_threshold: f64,
    /// Gradient descent iteration budget for the convergence check.
    pub fit_budget: usize,
    /// Fixed gradient descent step for the convergence check.
    pub fit_step: f64,
    /// A class fit is decisive if best ≤ margin · runner-up.
    pub decisiveness_margin: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            kl_threshold: 1e-3,
            grad_norm_threshold: 1e-2,
            fit_budget: 500,
            fit_step: 0.5,
            decisiveness_margin: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    DistributionRecovery,
    Convergence,
    RuntimeBound,
    MemoryBound,
}

impl CheckId {
    pub fn name(self) -> &'static str {
        match self {
            CheckId::DistributionRecovery => "distribution_recovery",
            CheckId::Convergence => "convergence",
            CheckId::RuntimeBound => "runtime_bound",
            CheckId::MemoryBound => "memory_bound",
        }
    }

    pub fn is_reliability(self) -> bool {
        matches!(self, CheckId::DistributionRecovery | CheckId::Convergence)
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a check compares against: a numeric threshold or a complexity class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expectation {
    Threshold(f64),
    Class(ComplexityClass),
}

/// Outcome of a check on a single data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetOutcome {
    pub dataset: String,
    pub passed: bool,
    /// `None` when the check could not produce a finite value.
    pub metric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl DatasetOutcome {
    pub fn failed(dataset: impl Into<String>, reason: impl Into<String>) -> Self {
        DatasetOutcome {
            dataset: dataset.into(),
            passed: false,
            metric: None,
            detail: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: CheckId,
    pub passed: bool,
    /// Worst per-data-set metric (max KL, largest final gradient norm, or
    /// best fit score).
    pub metric: Option<f64>,
    pub threshold_or_expected: Expectation,
    pub per_dataset: Vec<DatasetOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
}

/// Serializable view of a complexity fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub best: ComplexityClass,
    pub decisive: bool,
    pub axis: String,
    pub scores: Vec<(ComplexityClass, Option<f64>)>,
}

pub(crate) fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl CheckResult {
    /// Aggregates per-data-set outcomes: the check passes only if every data
    /// set passed, and a check without any data set does not pass.
    pub fn from_datasets(check_id: CheckId, expected: Expectation, per_dataset: Vec<DatasetOutcome>) -> Self {
        let passed = !per_dataset.is_empty() && per_dataset.iter().all(|d| d.passed);
        let metric = if per_dataset.iter().any(|d| d.metric.is_none()) {
            None
        } else {
            per_dataset
                .iter()
                .filter_map(|d| d.metric)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        };
        CheckResult {
            check_id,
            passed,
            metric,
            threshold_or_expected: expected,
            per_dataset,
            fit: None,
        }
    }

    /// Folds several results of the same check into one.
    pub fn merge(results: Vec<CheckResult>) -> Option<CheckResult> {
        let first = results.first()?;
        let (id, expected) = (first.check_id, first.threshold_or_expected);
        let per_dataset = results.into_iter().flat_map(|r| r.per_dataset).collect();
        Some(CheckResult::from_datasets(id, expected, per_dataset))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(name: &str, passed: bool, metric: f64) -> DatasetOutcome {
        DatasetOutcome {
            dataset: name.into(),
            passed,
            metric: Some(metric),
            detail: None,
        }
    }

    #[test]
    fn aggregation_requires_every_dataset() {
        let mixed = vec![
            outcome("a", true, 1e-5),
            outcome("b", false, 0.2),
            outcome("c", true, 1e-4),
        ];
        let r = CheckResult::from_datasets(CheckId::DistributionRecovery, Expectation::Threshold(1e-3), mixed);
        assert!(!r.passed);
        assert_eq!(r.metric, Some(0.2));

        let all = vec![outcome("a", true, 1e-5), outcome("b", true, 2e-4)];
        let r = CheckResult::from_datasets(CheckId::DistributionRecovery, Expectation::Threshold(1e-3), all);
        assert!(r.passed);
        assert_eq!(r.metric, Some(2e-4));

        let r = CheckResult::from_datasets(CheckId::Convergence, Expectation::Threshold(1e-2), vec![]);
        assert!(!r.passed);
        assert_eq!(r.metric, None);
    }

    #[test]
    fn errors_poison_metric() {
        let r = CheckResult::from_datasets(
            CheckId::Convergence,
            Expectation::Threshold(1e-2),
            vec![outcome("a", true, 1e-3), DatasetOutcome::failed("b", "infeasible")],
        );
        assert!(!r.passed);
        assert_eq!(r.metric, None);
    }

    #[test]
    fn merge_concatenates() {
        let a = CheckResult::from_datasets(
            CheckId::Convergence,
            Expectation::Threshold(1e-2),
            vec![outcome("a", true, 1e-3)],
        );
        let b = CheckResult::from_datasets(
            CheckId::Convergence,
            Expectation::Threshold(1e-2),
            vec![outcome("b", false, 0.5)],
        );
        let m = CheckResult::merge(vec![a, b]).unwrap();
        assert_eq!(m.per_dataset.len(), 2);
        assert!(!m.passed);
        assert!(CheckResult::merge(vec![]).is_none());
    }

    #[test]
    fn expectation_json_shape() {
        let t = serde_json::to_string(&Expectation::Threshold(0.001)).unwrap();
        assert_eq!(t, "0.001");
        let c = serde_json::to_string(&Expectation::Class(ComplexityClass::Exponential)).unwrap();
        assert_eq!(c, "\"exponential\"");
        assert_eq!(
            serde_json::from_str::<Expectation>(&c).unwrap(),
            Expectation::Class(ComplexityClass::Exponential)
        );
    }
}
