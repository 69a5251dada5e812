//! Synthetic grid profiling suite, timed measurement and energy metering.
//!
//! Measurements must run serially: at most one measured task per process at
//! a time, with no background work owned by the suite.

mod measure;
mod meter;
mod suite;

pub use measure::{
    measure_task, measure_task_with, run_scaling_experiment, run_scaling_experiment_with, write_measurements_csv,
    MeasureConfig, Measurement, RepeatSample, ScalingPoint, ScalingRun, TaskOutput, DEFAULT_MIN_BATCH_SECONDS,
    DEFAULT_REPEATS,
};
pub use meter::{select_meter, EnergyMeter, MeterKind, ModelMeter, RaplMeter, DEFAULT_POWER_WATTS, RAPL_ENERGY_PATH};
pub use suite::{
    generate_profiling_suite, generate_profiling_suite_with, ProfilingSuite, SuiteEntry, SuiteParams,
    DEFAULT_FIELD_RANGE,
};
