use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average draw assumed by the model-based meter.
pub const DEFAULT_POWER_WATTS: f64 = 30.0;

/// Package-level cumulative energy counter in microjoules.
pub const RAPL_ENERGY_PATH: &str = "/sys/class/powercap/intel-rapl:0/energy_uj";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterKind {
    Model,
    Rapl,
}

impl MeterKind {
    pub fn name(self) -> &'static str {
        match self {
            MeterKind::Model => "model",
            MeterKind::Rapl => "rapl",
        }
    }
}

impl fmt::Display for MeterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(MeterKind::Model),
            "rapl" => Ok(MeterKind::Rapl),
            other => Err(Error::InvalidArgument(format!(
                "unknown meter '{other}' (expected model or rapl)"
            ))),
        }
    }
}

/// Energy source for a measured run. `begin` returns an opaque counter
/// snapshot that is handed back to `end` together with the wall-clock
/// runtime.
pub trait EnergyMeter {
    fn kind(&self) -> MeterKind;

    fn begin(&self) -> Result<u64>;

    /// Energy in watt-seconds consumed since `begin` returned `token`.
    fn end(&self, token: u64, runtime_seconds: f64) -> Result<f64>;

    /// Model-based meter used when this one cannot be read.
    fn fallback(&self) -> ModelMeter {
        ModelMeter::default()
    }

    /// Assumed constant power, for meters that model rather than measure.
    fn model_watts(&self) -> Option<f64> {
        None
    }
}

/// Constant power times wall-clock runtime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMeter {
    watts: f64,
}

impl ModelMeter {
    pub fn new(watts: f64) -> Result<Self> {
        if !(watts.is_finite() && watts > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "power must be positive and finite, got {watts}"
            )));
        }
        Ok(ModelMeter { watts })
    }

    pub fn watts(&self) -> f64 {
        self.watts
    }
}

impl Default for ModelMeter {
    fn default() -> Self {
        ModelMeter {
            watts: DEFAULT_POWER_WATTS,
        }
    }
}

impl EnergyMeter for ModelMeter {
    fn kind(&self) -> MeterKind {
        MeterKind::Model
    }

    fn begin(&self) -> Result<u64> {
        Ok(0)
    }

    fn end(&self, _token: u64, runtime_seconds: f64) -> Result<f64> {
        Ok(self.watts * runtime_seconds)
    }

    fn fallback(&self) -> ModelMeter {
        *self
    }

    fn model_watts(&self) -> Option<f64> {
        Some(self.watts)
    }
}

/// Reads the powercap RAPL package counter. Includes everything else the
/// package does during the run.
#[derive(Debug, Clone, PartialEq)]
pub struct RaplMeter {
    energy_path: PathBuf,
    fallback_watts: f64,
}

impl RaplMeter {
    pub fn new(fallback_watts: f64) -> Result<Self> {
        Self::with_path(RAPL_ENERGY_PATH, fallback_watts)
    }

    pub fn with_path(path: impl Into<PathBuf>, fallback_watts: f64) -> Result<Self> {
        ModelMeter::new(fallback_watts)?;
        Ok(RaplMeter {
            energy_path: path.into(),
            fallback_watts,
        })
    }

    pub fn is_available(&self) -> bool {
        self.read_counter().is_ok()
    }

    fn read_counter(&self) -> Result<u64> {
        read_u64(&self.energy_path)
    }

    fn wrap_range(&self) -> Option<u64> {
        let range = self.energy_path.with_file_name("max_energy_range_uj");
        read_u64(&range).ok()
    }
}

fn read_u64(path: &std::path::Path) -> Result<u64> {
    let text = fs::read_to_string(path).map_err(|e| Error::Meter(format!("{}: {e}", path.display())))?;
    text.trim()
        .parse()
        .map_err(|e| Error::Meter(format!("{}: unparsable counter '{}': {e}", path.display(), text.trim())))
}

impl EnergyMeter for RaplMeter {
    fn kind(&self) -> MeterKind {
        MeterKind::Rapl
    }

    fn begin(&self) -> Result<u64> {
        self.read_counter()
    }

    fn end(&self, token: u64, _runtime_seconds: f64) -> Result<f64> {
        let now = self.read_counter()?;
        let delta = if now >= token {
            now - token
        } else {
            let range = self
                .wrap_range()
                .ok_or_else(|| Error::Meter("energy counter wrapped and the range is unknown".into()))?;
            range - token + now
        };
        Ok(delta as f64 * 1e-6)
    }

    fn fallback(&self) -> ModelMeter {
        ModelMeter {
            watts: self.fallback_watts,
        }
    }
}

/// Builds the requested meter. A RAPL meter that cannot be read is still
/// returned; measurements then fall back to the model meter and say so.
pub fn select_meter(kind: MeterKind, watts: f64) -> Result<Box<dyn EnergyMeter>> {
    Ok(match kind {
        MeterKind::Model => Box::new(ModelMeter::new(watts)?),
        MeterKind::Rapl => Box::new(RaplMeter::new(watts)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_meter_definition() {
        let m = ModelMeter::new(30.0).unwrap();
        let t = m.begin().unwrap();
        assert_eq!(m.end(t, 2.0).unwrap(), 60.0);
        assert!(ModelMeter::new(0.0).is_err());
        assert!(ModelMeter::new(f64::NAN).is_err());
    }

    #[test]
    fn rapl_counter_and_wrap() {
        let dir = tempfile::tempdir().unwrap();
        let energy = dir.path().join("energy_uj");
        fs::write(&energy, "1000000\n").unwrap();
        fs::write(dir.path().join("max_energy_range_uj"), "5000000\n").unwrap();
        let m = RaplMeter::with_path(&energy, 30.0).unwrap();
        assert!(m.is_available());
        let t = m.begin().unwrap();
        fs::write(&energy, "3500000\n").unwrap();
        assert!((m.end(t, 0.1).unwrap() - 2.5).abs() < 1e-12);
        let t = m.begin().unwrap();
        fs::write(&energy, "500000\n").unwrap();
        assert!((m.end(t, 0.1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn missing_rapl_reports_error() {
        let m = RaplMeter::with_path("/nonexistent/energy_uj", 25.0).unwrap();
        assert!(!m.is_available());
        assert!(matches!(m.begin(), Err(Error::Meter(_))));
        assert_eq!(m.fallback().watts(), 25.0);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("rapl".parse::<MeterKind>().unwrap(), MeterKind::Rapl);
        assert_eq!("model".parse::<MeterKind>().unwrap(), MeterKind::Model);
        assert!("gpu".parse::<MeterKind>().is_err());
    }
}
