//! Maximum-likelihood fitting of the log-linear weights.
//!
//! For the overcomplete exponential-family parameterization the average
//! negative log-likelihood is `ln Z(θ) − ⟨μ̂, θ⟩` and its gradient is
//! `μ_model − μ̂`, entry by entry over every vertex and edge table.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{Backend, PreparedBackend};
use crate::mrf::{empirical_marginals, DiscreteMRF, MarginalSet, SampleSet};

/// Same layout as the model's weight tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    pub vertex: Vec<Vec<f64>>,
    pub edge: Vec<Vec<f64>>,
}

impl GradientVector {
    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.vertex.iter().chain(&self.edge).flatten().copied()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0, |m, g| m.max(g.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodValue {
    pub nll: f64,
    /// False when ln Z is the Bethe approximation from LBP beliefs.
    pub exact: bool,
}

/// Objective bound to one data set and one prepared backend.
struct Objective<'a> {
    backend: PreparedBackend,
    empirical: &'a MarginalSet,
}

impl Objective<'_> {
    fn evaluate(&self, mrf: &DiscreteMRF) -> Result<(LikelihoodValue, GradientVector)> {
        let report = self.backend.infer(mrf)?;
        let log_z = self.backend.log_partition(mrf, &report);
        let dot = |w: &[Vec<f64>], mu: &[Vec<f64>]| -> f64 {
            w.iter()
                .zip(mu)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
                .sum()
        };
        let mean_score =
            dot(mrf.vertex_weights(), &self.empirical.vertex) + dot(mrf.edge_weights(), &self.empirical.edge);
        let diff = |model: &[Vec<f64>], data: &[Vec<f64>]| -> Vec<Vec<f64>> {
            model
                .iter()
                .zip(data)
                .map(|(m, d)| m.iter().zip(d).map(|(a, b)| a - b).collect())
                .collect()
        };
        let grad = GradientVector {
            vertex: diff(&report.marginals.vertex, &self.empirical.vertex),
            edge: diff(&report.marginals.edge, &self.empirical.edge),
        };
        Ok((
            LikelihoodValue {
                nll: log_z - mean_score,
                exact: report.exact,
            },
            grad,
        ))
    }
}

fn check_samples(mrf: &DiscreteMRF, samples: &SampleSet) -> Result<()> {
    if samples.graph() != mrf.graph() {
        return Err(Error::InvalidArgument(
            "samples were drawn over a different graph than the model".into(),
        ));
    }
    Ok(())
}

/// `ln Z − (1/N)·Σ_rows score(row)` with ln Z from `backend`.
pub fn negative_avg_log_likelihood(
    mrf: &DiscreteMRF,
    samples: &SampleSet,
    backend: &Backend,
) -> Result<LikelihoodValue> {
    check_samples(mrf, samples)?;
    let empirical = empirical_marginals(samples)?;
    let objective = Objective {
        backend: backend.prepare(mrf.graph())?,
        empirical: &empirical,
    };
    Ok(objective.evaluate(mrf)?.0)
}

/// Model marginals (from `backend`) minus empirical marginals.
pub fn nll_gradient(mrf: &DiscreteMRF, samples: &SampleSet, backend: &Backend) -> Result<GradientVector> {
    check_samples(mrf, samples)?;
    let empirical = empirical_marginals(samples)?;
    let objective = Objective {
        backend: backend.prepare(mrf.graph())?,
        empirical: &empirical,
    };
    Ok(objective.evaluate(mrf)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub step: f64,
    pub max_iterations: usize,
    pub grad_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            step: 0.5,
            max_iterations: 500,
            grad_tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub iteration: usize,
    pub nll: f64,
    pub grad_norm: f64,
    /// Step applied after this record; zero on the terminal record.
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub records: Vec<FitRecord>,
}

impl FitTrace {
    pub fn final_grad_norm(&self) -> Option<f64> {
        self.records.last().map(|r| r.grad_norm)
    }

    pub fn converged(&self, tolerance: f64) -> bool {
        self.final_grad_norm().is_some_and(|g| g < tolerance)
    }

    /// CSV with columns `iteration,nll,grad_norm,step`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iteration", "nll", "grad_norm", "step"])?;
        for r in &self.records {
            w.write_record([
                r.iteration.to_string(),
                r.nll.to_string(),
                r.grad_norm.to_string(),
                r.step.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed-step gradient descent `θ ← θ − step·∇`, stopping when the L2 norm
/// of the gradient drops below `grad_tolerance` or after `max_iterations`
/// updates. Every evaluated point is recorded in the trace.
pub fn gradient_descent_fit(
    init: &DiscreteMRF,
    samples: &SampleSet,
    config: &FitConfig,
    backend: &Backend,
) -> Result<(DiscreteMRF, FitTrace)> {
    if !(config.step > 0.0 && config.step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {}",
            config.step
        )));
    }
    if config.grad_tolerance.is_nan() || config.grad_tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "gradient tolerance must be positive, got {}",
            config.grad_tolerance
        )));
    }
    check_samples(init, samples)?;
    let empirical = empirical_marginals(samples)?;
    let objective = Objective {
        backend: backend.prepare(init.graph())?,
        empirical: &empirical,
    };

    let mut model = init.clone();
    let mut trace = FitTrace::default();
    for iteration in 0..=config.max_iterations {
        let (value, grad) = objective.evaluate(&model)?;
        let grad_norm = grad.l2_norm();
        if !value.nll.is_finite() || !grad_norm.is_finite() {
            return Err(Error::NonFiniteLoss { iteration });
        }
        let done = grad_norm < config.grad_tolerance || iteration == config.max_iterations;
        trace.records.push(FitRecord {
            iteration,
            nll: value.nll,
            grad_norm,
            step: if done { 0.0 } else { config.step },
        });
        if done {
            break;
        }
        let update = |w: &[Vec<f64>], g: &[Vec<f64>]| -> Vec<Vec<f64>> {
            w.iter()
                .zip(g)
                .map(|(w, g)| w.iter().zip(g).map(|(w, g)| w - config.step * g).collect())
                .collect()
        };
        model = model
            .with_weights(
                update(model.vertex_weights(), &grad.vertex),
                update(model.edge_weights(), &grad.edge),
            )
            .map_err(|_| Error::NonFiniteLoss {
                iteration: iteration + 1,
            })?;
    }
    Ok((model, trace))
}
