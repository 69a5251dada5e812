use serde::{Deserialize, Serialize};

use super::{
    finite, fit_complexity_class, CheckConfig, CheckId, CheckResult, ComplexityClass, DatasetOutcome, Expectation,
    FitSummary,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Runtime,
    Memory,
}

/// Passes iff the measurements are decisively classified as `expected`
/// among all candidate classes.
pub fn performance_bound_check(
    measurements: &[(u64, f64)],
    expected: ComplexityClass,
    resource: Resource,
    axis: &str,
    config: &CheckConfig,
) -> Result<CheckResult> {
    let fit = fit_complexity_class(measurements, &ComplexityClass::ALL, config.decisiveness_margin)?;
    let best_score = fit
        .scores
        .iter()
        .find(|s| s.0 == fit.best)
        .map(|s| s.1)
        .unwrap_or(f64::INFINITY);
    let passed = fit.best == expected && fit.decisive;
    let detail = format!(
        "best fit {}{} over {} points",
        fit.best,
        if fit.decisive { "" } else { " (indecisive)" },
        measurements.len()
    );
    let check_id = match resource {
        Resource::Runtime => CheckId::RuntimeBound,
        Resource::Memory => CheckId::MemoryBound,
    };
    let mut result = CheckResult::from_datasets(
        check_id,
        Expectation::Class(expected),
        vec![DatasetOutcome {
            dataset: "scaling_suite".into(),
            passed,
            metric: finite(best_score),
            detail: Some(detail),
        }],
    );
    result.fit = Some(FitSummary {
        best: fit.best,
        decisive: fit.decisive,
        axis: axis.to_string(),
        scores: fit.scores.iter().map(|&(c, s)| (c, finite(s))).collect(),
    });
    Ok(result)
}
