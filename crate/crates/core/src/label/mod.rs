//! The two-segment care label: assembly from checks and measurements, and
//! rendering to JSON, text and SVG.

mod certify;
mod environment;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use certify::{
    certify, certify_with_meter, certify_with_run, write_outputs, CertifyParams, OutputFormat, DEFAULT_COUPLING_RANGE,
};
pub use environment::{cpu_model, os_description};
pub use render::{rating_color, render_json, render_svg, render_text};

use crate::checks::{CheckConfig, CheckId, CheckResult};
use crate::knowledge::{BadgeScales, Category, MethodConfiguration, Rating};
use crate::profiling::{MeasureConfig, MeterKind, SuiteParams};

pub const LABEL_FORMAT_VERSION: u32 = 1;

/// Placeholder for machine-dependent values in redacted labels.
pub const REDACTED: &str = "<redacted>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Pass,
    Fail,
}

impl Mark {
    pub fn from_passed(passed: bool) -> Self {
        if passed {
            Mark::Pass
        } else {
            Mark::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Mark::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mark::Pass => "pass",
            Mark::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadgeRef {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySegment {
    pub method_name: String,
    pub description: String,
    pub ratings: BTreeMap<Category, Rating>,
    pub badges: Vec<BadgeRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub cpu_model: String,
    pub os: String,
    pub meter: MeterKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_watts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter_warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkmarks {
    pub reliability: Mark,
    pub runtime: Mark,
    pub memory: Mark,
}

/// A raw measurement and its grade; both absent when the measurement
/// stage failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredValue {
    pub value: Option<f64>,
    pub unit: String,
    pub grade: Option<Rating>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBadges {
    /// Grid side of the suite entry the values come from.
    pub reference_side: Option<usize>,
    pub runtime: MeasuredValue,
    pub memory: MeasuredValue,
    pub energy: MeasuredValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplementationSegment {
    pub name: String,
    pub version: String,
    pub inference_backend: String,
    pub environment: Environment,
    pub checkmarks: Checkmarks,
    pub measurements: MeasurementBadges,
}

/// One row of the scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub side: usize,
    pub edge_count: usize,
    pub table_cells: Option<u64>,
    pub iterations: Option<usize>,
    pub runtime_s: Option<f64>,
    pub runtime_stddev_s: Option<f64>,
    pub peak_rss_mb: Option<f64>,
    pub energy_ws: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub thresholds: CheckConfig,
    pub badge_scales: BadgeScales,
    pub db_schema_version: u32,
    pub seed: u64,
    pub suite: SuiteParams,
    pub measure: MeasureConfig,
    pub checks: Vec<CheckResult>,
    pub scaling: Vec<ScalingRow>,
    pub infeasible_sides: Vec<usize>,
    pub stage_errors: Vec<StageError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareLabel {
    pub format_version: u32,
    pub configuration: MethodConfiguration,
    pub theory: TheorySegment,
    pub implementation: ImplementationSegment,
    pub audit: Audit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl CareLabel {
    pub fn check(&self, id: CheckId) -> Option<&CheckResult> {
        self.audit.checks.iter().find(|c| c.check_id == id)
    }

    /// Copy with every machine- or timing-dependent value replaced:
    /// environment strings, raw measurements, runtime fit scores and the
    /// timing columns of the scaling table. Everything left is a pure
    /// function of the inputs and the seed.
    pub fn redacted(&self) -> CareLabel {
        let mut l = self.clone();
        l.timestamp = None;
        let env = &mut l.implementation.environment;
        env.cpu_model = REDACTED.into();
        env.os = REDACTED.into();
        let m = &mut l.implementation.measurements;
        for v in [&mut m.runtime, &mut m.memory, &mut m.energy] {
            v.value = None;
        }
        for row in &mut l.audit.scaling {
            row.runtime_s = None;
            row.runtime_stddev_s = None;
            row.peak_rss_mb = None;
            row.energy_ws = None;
        }
        for check in l
            .audit
            .checks
            .iter_mut()
            .filter(|c| c.check_id == CheckId::RuntimeBound)
        {
            check.metric = None;
            for d in &mut check.per_dataset {
                d.metric = None;
                d.detail = None;
            }
            if let Some(fit) = &mut check.fit {
                fit.scores.iter_mut().for_each(|s| s.1 = None);
            }
        }
        l
    }
}
