use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{
    Audit, BadgeRef, CareLabel, Checkmarks, Environment, ImplementationSegment, Mark, MeasuredValue, MeasurementBadges,
    ScalingRow, StageError, TheorySegment, LABEL_FORMAT_VERSION,
};
use crate::checks::{
    convergence_outcome, distribution_recovery_outcome, performance_bound_check, CheckConfig, CheckId, CheckResult,
    ComplexityClass, DatasetOutcome, Expectation, Resource,
};
use crate::error::{Error, Result};
use crate::inference::Backend;
use crate::knowledge::{
    collect_badges, combine_ratings, measurement_badge, ExpectedComplexity, KnowledgeDb, MethodConfiguration, SizeAxis,
};
use crate::mrf::ENUMERATION_CAP;
use crate::profiling::{
    generate_profiling_suite_with, run_scaling_experiment_with, select_meter, write_measurements_csv, EnergyMeter,
    MeasureConfig, MeterKind, ProfilingSuite, ScalingRun, SuiteParams, DEFAULT_REPEATS,
};

/// Potts coupling range of the default certification suite.
pub const DEFAULT_COUPLING_RANGE: (f64, f64) = (-1.0, 1.0);

const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyParams {
    pub suite: SuiteParams,
    pub measure: MeasureConfig,
}

impl CertifyParams {
    pub fn new(seed: u64, max_side: usize) -> Self {
        CertifyParams {
            suite: SuiteParams::new(seed, max_side, DEFAULT_SAMPLES, DEFAULT_COUPLING_RANGE),
            measure: MeasureConfig::new(DEFAULT_REPEATS),
        }
    }
}

impl Default for CertifyParams {
    fn default() -> Self {
        CertifyParams::new(7, 8)
    }
}

/// Runs the full pipeline with the meter built from `kind` and `watts`.
pub fn certify_with_meter(
    configuration: &MethodConfiguration,
    db: &KnowledgeDb,
    params: &CertifyParams,
    check_config: &CheckConfig,
    kind: MeterKind,
    watts: f64,
) -> Result<CareLabel> {
    let meter = select_meter(kind, watts)?;
    certify(configuration, db, params, check_config, meter.as_ref())
}

/// Resolves the configuration, checks the implementation on the profiling
/// suite and assembles the label. Only resolution errors abort; any later
/// failure becomes a failed check and a stage error in the audit.
pub fn certify(
    configuration: &MethodConfiguration,
    db: &KnowledgeDb,
    params: &CertifyParams,
    check_config: &CheckConfig,
    meter: &dyn EnergyMeter,
) -> Result<CareLabel> {
    certify_with_run(configuration, db, params, check_config, meter).map(|(label, _)| label)
}

/// As [`certify`], also returning the scaling run behind the measurements.
pub fn certify_with_run(
    configuration: &MethodConfiguration,
    db: &KnowledgeDb,
    params: &CertifyParams,
    check_config: &CheckConfig,
    meter: &dyn EnergyMeter,
) -> Result<(CareLabel, Option<ScalingRun>)> {
    let resolved = db.resolve(configuration)?;
    let ratings = combine_ratings(configuration, db)?;
    let badges = collect_badges(configuration, db)?
        .into_iter()
        .map(|id| {
            let name = db.badge(&id).map_or_else(|| id.clone(), |b| b.name.clone());
            BadgeRef { id, name }
        })
        .collect();
    let backend = resolved.backend();
    let expected_runtime = resolved.inference.expected_runtime_class;
    let expected_memory = resolved.inference.expected_memory_class;

    let mut errors = Vec::new();
    let mut checks = Vec::new();
    let mut run = None;
    match generate_profiling_suite_with(params.suite) {
        Ok(suite) => {
            checks.extend(reliability_checks(&suite, &backend, check_config, &mut errors));
            match run_scaling_experiment_with(&suite, &backend, &params.measure, meter) {
                Ok(r) => {
                    checks.push(bound_check(
                        &r,
                        expected_runtime,
                        Resource::Runtime,
                        check_config,
                        &mut errors,
                    ));
                    checks.push(bound_check(
                        &r,
                        expected_memory,
                        Resource::Memory,
                        check_config,
                        &mut errors,
                    ));
                    run = Some(r);
                }
                Err(e) => {
                    let reason = stage_error(&mut errors, "scaling", e);
                    checks.push(failed_bound(CheckId::RuntimeBound, expected_runtime, &reason));
                    checks.push(failed_bound(CheckId::MemoryBound, expected_memory, &reason));
                }
            }
        }
        Err(e) => {
            let reason = stage_error(&mut errors, "suite", e);
            checks.push(failed_threshold(
                CheckId::DistributionRecovery,
                check_config.kl_threshold,
                &reason,
            ));
            checks.push(failed_threshold(
                CheckId::Convergence,
                check_config.grad_norm_threshold,
                &reason,
            ));
            checks.push(failed_bound(CheckId::RuntimeBound, expected_runtime, &reason));
            checks.push(failed_bound(CheckId::MemoryBound, expected_memory, &reason));
        }
    }

    let passed = |pred: &dyn Fn(CheckId) -> bool| {
        let mut relevant = checks.iter().filter(|c| pred(c.check_id)).peekable();
        relevant.peek().is_some() && relevant.all(|c| c.passed)
    };
    let checkmarks = Checkmarks {
        reliability: Mark::from_passed(passed(&|id| id.is_reliability())),
        runtime: Mark::from_passed(passed(&|id| id == CheckId::RuntimeBound)),
        memory: Mark::from_passed(passed(&|id| id == CheckId::MemoryBound)),
    };

    let reference = run.as_ref().and_then(ScalingRun::reference);
    let scales = &db.badge_scales;
    let mut grade = |what: &str, value: Option<f64>, unit: &str, scale: &[f64]| {
        let grade = value.and_then(|v| match measurement_badge(v, scale) {
            Ok(r) => Some(r),
            Err(e) => {
                stage_error(&mut errors, &format!("{what}_badge"), e);
                None
            }
        });
        MeasuredValue {
            value,
            unit: unit.into(),
            grade,
        }
    };
    let m = reference.map(|p| &p.measurement);
    let measurements = MeasurementBadges {
        reference_side: reference.map(|p| p.side),
        runtime: grade("runtime", m.map(|m| m.runtime_seconds), "s", &scales.runtime),
        memory: grade("memory", m.map(|m| m.peak_memory_mb), "MB", &scales.memory),
        energy: grade("energy", m.map(|m| m.energy_ws), "Ws", &scales.energy),
    };

    let effective_meter = m.map_or(meter.kind(), |m| m.meter);
    let environment = Environment {
        cpu_model: super::cpu_model(),
        os: super::os_description(),
        meter: effective_meter,
        power_watts: (effective_meter == MeterKind::Model)
            .then(|| meter.model_watts().unwrap_or_else(|| meter.fallback().watts())),
        meter_warning: m.and_then(|m| m.meter_warning.clone()),
    };

    let scaling = run
        .as_ref()
        .map(|r| {
            r.points
                .iter()
                .map(|p| ScalingRow {
                    side: p.side,
                    edge_count: p.edge_count,
                    table_cells: p.measurement.analytic_table_cells,
                    iterations: p.measurement.iterations,
                    runtime_s: Some(p.measurement.runtime_seconds),
                    runtime_stddev_s: Some(p.measurement.runtime_stddev),
                    peak_rss_mb: Some(p.measurement.peak_memory_mb),
                    energy_ws: Some(p.measurement.energy_ws),
                })
                .collect()
        })
        .unwrap_or_default();
    let infeasible_sides = run
        .as_ref()
        .map(|r| r.infeasible.iter().map(|(side, _)| *side).collect())
        .unwrap_or_default();

    let label = CareLabel {
        format_version: LABEL_FORMAT_VERSION,
        configuration: configuration.clone(),
        theory: TheorySegment {
            method_name: format!("{} ({})", resolved.method.name, resolved.inference.name),
            description: resolved.method.description.clone(),
            ratings,
            badges,
        },
        implementation: ImplementationSegment {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            inference_backend: backend.short_name().into(),
            environment,
            checkmarks,
            measurements,
        },
        audit: Audit {
            thresholds: *check_config,
            badge_scales: *scales,
            db_schema_version: db.schema_version,
            seed: params.suite.seed,
            suite: params.suite,
            measure: params.measure,
            checks,
            scaling,
            infeasible_sides,
            stage_errors: errors,
        },
        timestamp: None,
    };
    Ok((label, run))
}

fn stage_error(errors: &mut Vec<StageError>, stage: &str, e: Error) -> String {
    let message = e.to_string();
    errors.push(StageError {
        stage: stage.into(),
        message: message.clone(),
    });
    message
}

/// Distribution recovery on every entry small enough to enumerate, and
/// convergence of a fit from zero weights on every entry.
fn reliability_checks(
    suite: &ProfilingSuite,
    backend: &Backend,
    config: &CheckConfig,
    errors: &mut Vec<StageError>,
) -> [CheckResult; 2] {
    let mut recovery = Vec::new();
    let mut convergence = Vec::new();
    for entry in &suite.entries {
        let id = entry.id();
        let mut record = |stage: &str, outcome: Result<DatasetOutcome>| match outcome {
            Ok(o) => o,
            Err(e) => DatasetOutcome::failed(id.clone(), stage_error(errors, &format!("{stage}/{id}"), e)),
        };
        if entry.model.graph().state_space_size() <= u128::from(ENUMERATION_CAP) {
            recovery.push(record(
                CheckId::DistributionRecovery.name(),
                distribution_recovery_outcome(&id, &entry.model, backend, config),
            ));
        }
        convergence.push(record(
            CheckId::Convergence.name(),
            convergence_outcome(&id, backend, entry.model.graph(), &entry.samples, config),
        ));
    }
    [
        CheckResult::from_datasets(
            CheckId::DistributionRecovery,
            Expectation::Threshold(config.kl_threshold),
            recovery,
        ),
        CheckResult::from_datasets(
            CheckId::Convergence,
            Expectation::Threshold(config.grad_norm_threshold),
            convergence,
        ),
    ]
}

fn bound_check(
    run: &ScalingRun,
    expected: Option<ExpectedComplexity>,
    resource: Resource,
    config: &CheckConfig,
    errors: &mut Vec<StageError>,
) -> CheckResult {
    let id = match resource {
        Resource::Runtime => CheckId::RuntimeBound,
        Resource::Memory => CheckId::MemoryBound,
    };
    let Some(expected) = expected else {
        let reason = stage_error(
            errors,
            id.name(),
            Error::Schema(format!("no expected class for {}", id.name())),
        );
        return failed_bound(id, None, &reason);
    };
    let by_edges = expected.axis == SizeAxis::EdgeCount;
    let data = match resource {
        Resource::Runtime => run.runtime_per_iteration_by(by_edges),
        Resource::Memory => run.cells_by(by_edges),
    };
    performance_bound_check(&data, expected.class, resource, expected.axis.as_str(), config)
        .unwrap_or_else(|e| failed_bound(id, Some(expected), &stage_error(errors, id.name(), e)))
}

fn failed_threshold(id: CheckId, threshold: f64, reason: &str) -> CheckResult {
    CheckResult::from_datasets(
        id,
        Expectation::Threshold(threshold),
        vec![DatasetOutcome::failed("suite", reason)],
    )
}

fn failed_bound(id: CheckId, expected: Option<ExpectedComplexity>, reason: &str) -> CheckResult {
    let class = expected.map_or(ComplexityClass::Constant, |e| e.class);
    CheckResult::from_datasets(
        id,
        Expectation::Class(class),
        vec![DatasetOutcome::failed("scaling_suite", reason)],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputFormat {
    Json,
    Text,
    Svg,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Json, OutputFormat::Text, OutputFormat::Svg];

    pub fn file_name(self) -> &'static str {
        match self {
            OutputFormat::Json => "label.json",
            OutputFormat::Text => "label.txt",
            OutputFormat::Svg => "label.svg",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(OutputFormat::Json),
            "text" | "txt" => Ok(OutputFormat::Text),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::InvalidArgument(format!(
                "unknown format '{other}' (expected json, text or svg)"
            ))),
        }
    }
}

/// Writes the requested label renderings plus `checks.json` into `dir`,
/// and `measurements.csv` when a scaling run is given.
pub fn write_outputs(label: &CareLabel, run: Option<&ScalingRun>, dir: &Path, formats: &[OutputFormat]) -> Result<()> {
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })
    };
    fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.display().to_string(),
        source,
    })?;
    for &format in formats {
        let text = match format {
            OutputFormat::Json => super::render_json(label)?,
            OutputFormat::Text => super::render_text(label),
            OutputFormat::Svg => super::render_svg(label),
        };
        write(format.file_name(), &text)?;
    }
    write(
        "checks.json",
        &crate::canonical::to_canonical_json(&label.audit.checks)?,
    )?;
    if let Some(run) = run {
        let path = dir.join("measurements.csv");
        let file = fs::File::create(&path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        write_measurements_csv(run, file)?;
    }
    Ok(())
}
