use super::{finite, CheckConfig, CheckId, CheckResult, DatasetOutcome, Expectation};
use crate::error::Result;
use crate::inference::{infer, Backend};
use crate::mrf::{marginals_bruteforce, DiscreteMRF, GraphStructure, MarginalSet, SampleSet};
use crate::training::{gradient_descent_fit, FitConfig};

/// Floor applied to the approximating distribution before division.
pub const KL_FLOOR: f64 = 1e-300;

/// KL(p ‖ q) over one table; entries with p = 0 contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(KL_FLOOR)).ln())
        .sum()
}

/// Largest KL over all vertex and edge tables.
pub(crate) fn max_table_kl(exact: &MarginalSet, approx: &MarginalSet) -> f64 {
    exact
        .vertex
        .iter()
        .zip(&approx.vertex)
        .chain(exact.edge.iter().zip(&approx.edge))
        .map(|(p, q)| kl_divergence(p, q))
        .fold(0.0, f64::max)
}

/// Compares brute-force marginals of `true_mrf` against the backend's
/// marginals at the same parameters.
pub fn distribution_recovery_outcome(
    dataset: &str,
    true_mrf: &DiscreteMRF,
    backend: &Backend,
    config: &CheckConfig,
) -> Result<DatasetOutcome> {
    let exact = marginals_bruteforce(true_mrf)?;
    let report = infer(true_mrf, backend)?;
    let kl = max_table_kl(&exact, &report.marginals);
    let detail = (!report.converged).then(|| format!("did not converge in {} iterations", report.iterations_used));
    Ok(DatasetOutcome {
        dataset: dataset.to_string(),
        passed: kl < config.kl_threshold,
        metric: finite(kl),
        detail,
    })
}

pub fn distribution_recovery_check(
    true_mrf: &DiscreteMRF,
    backend: &Backend,
    config: &CheckConfig,
) -> Result<CheckResult> {
    let outcome = distribution_recovery_outcome("model", true_mrf, backend, config)?;
    Ok(CheckResult::from_datasets(
        CheckId::DistributionRecovery,
        Expectation::Threshold(config.kl_threshold),
        vec![outcome],
    ))
}

/// Fits from zero weights on the true structure and records the final
/// gradient norm.
pub fn convergence_outcome(
    dataset: &str,
    backend: &Backend,
    true_graph: &GraphStructure,
    samples: &SampleSet,
    config: &CheckConfig,
) -> Result<DatasetOutcome> {
    let init = DiscreteMRF::zeros(true_graph.clone());
    let fit = FitConfig {
        step: config.fit_step,
        max_iterations: config.fit_budget,
        grad_tolerance: config.grad_norm_threshold,
    };
    let (_, trace) = gradient_descent_fit(&init, samples, &fit, backend)?;
    let norm = trace.final_grad_norm().unwrap_or(f64::INFINITY);
    Ok(DatasetOutcome {
        dataset: dataset.to_string(),
        passed: norm < config.grad_norm_threshold,
        metric: finite(norm),
        detail: Some(format!("{} gradient evaluations", trace.records.len())),
    })
}

pub fn convergence_check(
    backend: &Backend,
    true_graph: &GraphStructure,
    samples: &SampleSet,
    config: &CheckConfig,
) -> Result<CheckResult> {
    let outcome = convergence_outcome("samples", backend, true_graph, samples, config)?;
    Ok(CheckResult::from_datasets(
        CheckId::Convergence,
        Expectation::Threshold(config.grad_norm_threshold),
        vec![outcome],
    ))
}
