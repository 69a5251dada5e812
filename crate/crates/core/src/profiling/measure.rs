use std::fs;
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::meter::{EnergyMeter, MeterKind, ModelMeter};
use super::suite::ProfilingSuite;
use crate::error::{Error, Result};
use crate::inference::Backend;

pub const DEFAULT_REPEATS: usize = 10;

/// Each repeat times back-to-back calls until at least this much wall-clock
/// time has passed, so sub-microsecond tasks stay above timer resolution.
pub const DEFAULT_MIN_BATCH_SECONDS: f64 = 0.02;

const MAX_BATCH: usize = 1_000_000;

static MEASURE_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub repeats: usize,
    pub min_batch_seconds: f64,
}

impl MeasureConfig {
    pub fn new(repeats: usize) -> Self {
        MeasureConfig {
            repeats,
            min_batch_seconds: DEFAULT_MIN_BATCH_SECONDS,
        }
    }
}

/// What a measured task reports about its own work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TaskOutput {
    pub table_cells: Option<u64>,
    /// Message-passing rounds, when the task is iterative.
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSample {
    pub runtime_s: f64,
    pub peak_rss_mb: f64,
    pub energy_ws: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Median wall-clock time over the repeats.
    pub runtime_seconds: f64,
    pub runtime_stddev: f64,
    /// Largest process high-water mark seen across repeats; 0 where the
    /// platform does not expose it.
    pub peak_memory_mb: f64,
    pub analytic_table_cells: Option<u64>,
    pub iterations: Option<usize>,
    /// Median energy over the repeats.
    pub energy_ws: f64,
    pub repeats: usize,
    /// Calls timed together in each repeat.
    pub batch_size: usize,
    pub meter: MeterKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter_warning: Option<String>,
    pub samples: Vec<RepeatSample>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn sample_stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn reset_peak_rss() {
    // Resets VmHWM to the current RSS on Linux; harmless elsewhere.
    if let Ok(mut f) = fs::OpenOptions::new().write(true).open("/proc/self/clear_refs") {
        let _ = f.write_all(b"5");
    }
}

fn peak_rss_mb() -> f64 {
    let Ok(status) = fs::read_to_string("/proc/self/status") else {
        return 0.0;
    };
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|rest| rest.trim().trim_end_matches("kB").trim().parse::<f64>().ok())
        .map_or(0.0, |kb| kb / 1024.0)
}

/// Runs `task` `repeats` times and summarizes per-call wall-clock time,
/// peak RSS and energy. Table cells and iteration counts must not change
/// between calls.
pub fn measure_task<F>(task: F, repeats: usize, meter: &dyn EnergyMeter) -> Result<Measurement>
where
    F: FnMut() -> Result<TaskOutput>,
{
    measure_task_with(task, &MeasureConfig::new(repeats), meter)
}

fn validate(config: &MeasureConfig) -> Result<()> {
    if config.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if !(config.min_batch_seconds >= 0.0 && config.min_batch_seconds.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "min_batch_seconds must be finite and non-negative, got {}",
            config.min_batch_seconds
        )));
    }
    Ok(())
}

/// The meter to read from, falling back to the model meter when `meter`
/// cannot start.
fn active_meter<'a>(meter: &'a dyn EnergyMeter, fallback: &'a ModelMeter) -> (&'a dyn EnergyMeter, Option<String>) {
    match meter.begin() {
        Ok(_) => (meter, None),
        Err(e) => (
            fallback,
            Some(format!("{} meter unavailable ({e}); using model meter", meter.kind())),
        ),
    }
}

/// One task under measurement: calibrated batch size plus the repeats
/// collected so far.
struct Probe<F> {
    task: F,
    expected: TaskOutput,
    batch_size: usize,
    samples: Vec<RepeatSample>,
}

impl<F: FnMut() -> Result<TaskOutput>> Probe<F> {
    /// One untimed call sizes the batch.
    fn calibrate(mut task: F, min_batch_seconds: f64) -> Result<Self> {
        let start = Instant::now();
        let expected = task()?;
        let once = start.elapsed().as_secs_f64();
        let batch_size = if once >= min_batch_seconds {
            1
        } else {
            ((min_batch_seconds / once.max(1e-9)).ceil() as usize).clamp(1, MAX_BATCH)
        };
        Ok(Probe {
            task,
            expected,
            batch_size,
            samples: Vec::new(),
        })
    }

    fn sample(&mut self, meter: &dyn EnergyMeter) -> Result<()> {
        reset_peak_rss();
        let token = meter.begin()?;
        let start = Instant::now();
        let mut outputs = Vec::with_capacity(self.batch_size);
        for _ in 0..self.batch_size {
            outputs.push((self.task)()?);
        }
        let batch_s = start.elapsed().as_secs_f64();
        let energy_ws = meter.end(token, batch_s)? / self.batch_size as f64;
        if let Some(other) = outputs.iter().find(|o| **o != self.expected) {
            return Err(Error::Profiling(format!(
                "task output changed between calls ({:?} vs {other:?})",
                self.expected
            )));
        }
        self.samples.push(RepeatSample {
            runtime_s: batch_s / self.batch_size as f64,
            peak_rss_mb: peak_rss_mb(),
            energy_ws,
        });
        Ok(())
    }

    fn finish(self, meter: MeterKind, meter_warning: Option<String>) -> Measurement {
        let runtimes: Vec<f64> = self.samples.iter().map(|s| s.runtime_s).collect();
        let energies: Vec<f64> = self.samples.iter().map(|s| s.energy_ws).collect();
        Measurement {
            runtime_seconds: median(&runtimes),
            runtime_stddev: sample_stddev(&runtimes),
            peak_memory_mb: self.samples.iter().map(|s| s.peak_rss_mb).fold(0.0, f64::max),
            analytic_table_cells: self.expected.table_cells,
            iterations: self.expected.iterations,
            energy_ws: median(&energies),
            repeats: self.samples.len(),
            batch_size: self.batch_size,
            meter,
            meter_warning,
            samples: self.samples,
        }
    }
}

/// Like [`measure_task`], with an explicit batching floor. One untimed call
/// calibrates the batch size. Only one measurement runs at a time per
/// process.
pub fn measure_task_with<F>(task: F, config: &MeasureConfig, meter: &dyn EnergyMeter) -> Result<Measurement>
where
    F: FnMut() -> Result<TaskOutput>,
{
    validate(config)?;
    let _serial = MEASURE_LOCK.lock().unwrap_or_else(|p| p.into_inner());
    let fallback = meter.fallback();
    let (active, warning) = active_meter(meter, &fallback);
    let mut probe = Probe::calibrate(task, config.min_batch_seconds)?;
    for _ in 0..config.repeats {
        probe.sample(active)?;
    }
    Ok(probe.finish(active.kind(), warning))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub side: usize,
    pub edge_count: usize,
    pub measurement: Measurement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub backend: Backend,
    pub points: Vec<ScalingPoint>,
    /// Sides skipped before measuring, with the reason.
    pub infeasible: Vec<(usize, String)>,
}

impl ScalingRun {
    /// (side, median runtime) pairs.
    pub fn runtime_by_side(&self) -> Vec<(u64, f64)> {
        self.points
            .iter()
            .map(|p| (p.side as u64, p.measurement.runtime_seconds))
            .collect()
    }

    /// (x, table cells) pairs where x is the side or the edge count.
    pub fn cells_by(&self, by_edges: bool) -> Vec<(u64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                let x = if by_edges { p.edge_count } else { p.side };
                p.measurement.analytic_table_cells.map(|c| (x as u64, c as f64))
            })
            .collect()
    }

    pub fn runtime_by(&self, by_edges: bool) -> Vec<(u64, f64)> {
        self.points
            .iter()
            .map(|p| {
                let x = if by_edges { p.edge_count } else { p.side };
                (x as u64, p.measurement.runtime_seconds)
            })
            .collect()
    }

    /// Median runtime divided by the message-passing rounds used, so that
    /// the iteration count does not enter the size dependence.
    pub fn runtime_per_iteration_by(&self, by_edges: bool) -> Vec<(u64, f64)> {
        self.points
            .iter()
            .map(|p| {
                let x = if by_edges { p.edge_count } else { p.side };
                let rounds = p.measurement.iterations.unwrap_or(1).max(1);
                (x as u64, p.measurement.runtime_seconds / rounds as f64)
            })
            .collect()
    }

    /// The largest measured size.
    pub fn reference(&self) -> Option<&ScalingPoint> {
        self.points.last()
    }
}

/// Times marginal inference on every suite entry's true model. Structure
/// preparation (the junction tree) happens outside the timed region.
pub fn run_scaling_experiment(
    suite: &ProfilingSuite,
    backend: &Backend,
    repeats: usize,
    meter: &dyn EnergyMeter,
) -> Result<ScalingRun> {
    run_scaling_experiment_with(suite, backend, &MeasureConfig::new(repeats), meter)
}

/// Repeats are interleaved across sizes, alternating direction each round,
/// so that slow phases of the host spread over all sizes instead of
/// skewing one.
pub fn run_scaling_experiment_with(
    suite: &ProfilingSuite,
    backend: &Backend,
    config: &MeasureConfig,
    meter: &dyn EnergyMeter,
) -> Result<ScalingRun> {
    validate(config)?;
    let mut prepared = Vec::new();
    let mut infeasible = Vec::new();
    for entry in &suite.entries {
        match backend.prepare(entry.model.graph()) {
            Ok(p) => prepared.push((entry, p)),
            Err(e @ Error::MemoryCapExceeded { .. }) => infeasible.push((entry.side, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if prepared.is_empty() {
        return Err(Error::Profiling(format!(
            "every suite size is infeasible for the {} backend",
            backend.short_name()
        )));
    }

    let _serial = MEASURE_LOCK.lock().unwrap_or_else(|p| p.into_inner());
    let fallback = meter.fallback();
    let (active, warning) = active_meter(meter, &fallback);
    let mut probes = prepared
        .iter()
        .map(|(entry, p)| {
            let task = move || {
                p.infer(&entry.model).map(|r| TaskOutput {
                    table_cells: Some(r.analytic_table_cells),
                    iterations: Some(r.iterations_used),
                })
            };
            Probe::calibrate(task, config.min_batch_seconds)
        })
        .collect::<Result<Vec<_>>>()?;
    for round in 0..config.repeats {
        if round % 2 == 0 {
            probes.iter_mut().try_for_each(|p| p.sample(active))?;
        } else {
            probes.iter_mut().rev().try_for_each(|p| p.sample(active))?;
        }
    }

    let points = prepared
        .iter()
        .zip(probes)
        .map(|((entry, _), probe)| ScalingPoint {
            side: entry.side,
            edge_count: entry.model.graph().edge_count(),
            measurement: probe.finish(active.kind(), warning.clone()),
        })
        .collect();
    Ok(ScalingRun {
        backend: *backend,
        points,
        infeasible,
    })
}

#[derive(Serialize)]
struct CsvRow {
    side: usize,
    repeat: usize,
    runtime_s: f64,
    peak_rss_mb: f64,
    table_cells: Option<u64>,
    energy_ws: f64,
    meter: MeterKind,
}

/// One row per (size, repeat).
pub fn write_measurements_csv<W: Write>(run: &ScalingRun, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in &run.points {
        for (repeat, s) in p.measurement.samples.iter().enumerate() {
            w.serialize(CsvRow {
                side: p.side,
                repeat,
                runtime_s: s.runtime_s,
                peak_rss_mb: s.peak_rss_mb,
                table_cells: p.measurement.analytic_table_cells,
                energy_ws: s.energy_ws,
                meter: p.measurement.meter,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
