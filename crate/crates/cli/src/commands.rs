use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use carelabel::checks::{CheckConfig, Expectation};
use carelabel::knowledge::{load_knowledge_db, Category, KnowledgeDb, MethodConfiguration};
use carelabel::label::{certify_with_run, render_json, write_outputs, CareLabel, CertifyParams};
use carelabel::profiling::{
    generate_profiling_suite_with, run_scaling_experiment_with, select_meter, write_measurements_csv, EnergyMeter,
    MeasureConfig, ScalingRun,
};
use carelabel::{Error, Result};

use crate::{CertifyArgs, CheckArgs, ConfigArgs, ProfileArgs, RenderArgs, SuiteArgs};

fn load_db(path: Option<&Path>) -> Result<KnowledgeDb> {
    match path {
        Some(p) => load_knowledge_db(p),
        None => Ok(KnowledgeDb::bundled()),
    }
}

impl ConfigArgs {
    fn configuration(&self) -> MethodConfiguration {
        MethodConfiguration::new(&self.method, &self.loss, &self.optimizer, &self.inference)
    }
}

impl SuiteArgs {
    fn params(&self) -> CertifyParams {
        let mut params = CertifyParams::new(self.seed, self.max_side);
        params.suite.samples_per_size = self.samples;
        params.measure = MeasureConfig::new(self.repeats);
        params
    }

    fn meter(&self) -> Result<Box<dyn EnergyMeter>> {
        select_meter(self.meter, self.power_watts)
    }
}

fn run(config: &ConfigArgs, suite: &SuiteArgs) -> Result<(CareLabel, Option<ScalingRun>)> {
    let db = load_db(config.db.as_deref())?;
    let meter = suite.meter()?;
    certify_with_run(
        &config.configuration(),
        &db,
        &suite.params(),
        &CheckConfig::default(),
        meter.as_ref(),
    )
}

fn write_file(path: PathBuf, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| Error::File {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(&path, text).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn certify(args: CertifyArgs) -> Result<ExitCode> {
    let (mut label, scaling) = run(&args.config, &args.suite)?;
    if args.timestamp {
        label.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
    write_outputs(&label, scaling.as_ref(), &args.out, &args.format)?;
    let marks = label.implementation.checkmarks;
    println!(
        "{}: reliability {}, runtime {}, memory {} -> {}",
        label.configuration.label(),
        marks.reliability.as_str(),
        marks.runtime.as_str(),
        marks.memory.as_str(),
        args.out.display()
    );
    for e in &label.audit.stage_errors {
        eprintln!("warning: {} stage failed: {}", e.stage, e.message);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn profile(args: ProfileArgs) -> Result<ExitCode> {
    let db = load_db(args.config.db.as_deref())?;
    let backend = db.resolve(&args.config.configuration())?.backend();
    let params = args.suite.params();
    let suite = generate_profiling_suite_with(params.suite)?;
    let meter = args.suite.meter()?;
    let run = run_scaling_experiment_with(&suite, &backend, &params.measure, meter.as_ref())?;
    println!(
        "{:>5} {:>6} {:>12} {:>6} {:>14} {:>14} {:>12} {:>14}",
        "side", "edges", "cells", "iters", "runtime_s", "stddev_s", "peak_mb", "energy_ws"
    );
    for p in &run.points {
        let m = &p.measurement;
        println!(
            "{:>5} {:>6} {:>12} {:>6} {:>14.6e} {:>14.6e} {:>12.3} {:>14.6e}",
            p.side,
            p.edge_count,
            m.analytic_table_cells.map_or("-".into(), |c| c.to_string()),
            m.iterations.map_or("-".into(), |i| i.to_string()),
            m.runtime_seconds,
            m.runtime_stddev,
            m.peak_memory_mb,
            m.energy_ws
        );
    }
    for (side, reason) in &run.infeasible {
        println!("{side:>5} infeasible: {reason}");
    }
    if let Some(w) = run.points.first().and_then(|p| p.measurement.meter_warning.as_ref()) {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = args.out {
        let mut csv = Vec::new();
        write_measurements_csv(&run, &mut csv)?;
        write_file(dir.join("measurements.csv"), &String::from_utf8_lossy(&csv))?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn check(args: CheckArgs) -> Result<ExitCode> {
    let (label, _) = run(&args.config, &args.suite)?;
    let checks = &label.audit.checks;
    for c in checks {
        let expected = match c.threshold_or_expected {
            Expectation::Threshold(t) => format!("< {t}"),
            Expectation::Class(class) => class.to_string(),
        };
        let metric = c.metric.map_or("n/a".into(), |m| format!("{m:.4e}"));
        println!(
            "{:<22} {:<4} metric {:<11} expected {}",
            c.check_id.name(),
            if c.passed { "pass" } else { "fail" },
            metric,
            expected
        );
        for d in c.per_dataset.iter().filter(|d| !d.passed) {
            let metric = d.metric.map_or(String::new(), |m| format!(" (metric {m:.4e})"));
            let detail = d.detail.as_ref().map_or(String::new(), |s| format!(": {s}"));
            println!("    {} failed{metric}{detail}", d.dataset);
        }
    }
    if let Some(dir) = args.out {
        write_file(
            dir.join("checks.json"),
            &carelabel::canonical::to_canonical_json(checks)?,
        )?;
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(if args.strict && !all_passed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

pub fn render(args: RenderArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.label).map_err(|source| Error::File {
        path: args.label.display().to_string(),
        source,
    })?;
    let label: CareLabel = serde_json::from_str(&text)?;
    write_outputs(&label, None, &args.out, &args.format)?;
    if render_json(&label)? != text {
        eprintln!("note: {} was not in canonical form", args.label.display());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn db_validate(path: Option<PathBuf>) -> Result<ExitCode> {
    let db = load_db(path.as_deref())?;
    println!(
        "ok: schema version {}, {} components, {} badges",
        db.schema_version,
        db.components.len(),
        db.badges.len()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn components_list(path: Option<PathBuf>) -> Result<ExitCode> {
    let db = load_db(path.as_deref())?;
    let header: Vec<&str> = Category::ALL.iter().map(|c| c.as_str()).collect();
    println!("{:<12} {:<10} {:<26} {}", "id", "kind", "name", header.join(" "));
    for c in &db.components {
        let ratings: Vec<String> = Category::ALL
            .iter()
            .zip(&header)
            .map(|(cat, h)| format!("{:<w$}", c.rating(*cat).as_str(), w = h.len()))
            .collect();
        println!(
            "{:<12} {:<10} {:<26} {}",
            c.id,
            c.kind.as_str(),
            c.name,
            ratings.join(" ").trim_end()
        );
    }
    Ok(ExitCode::SUCCESS)
}
