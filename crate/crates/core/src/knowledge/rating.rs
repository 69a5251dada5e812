use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Expert grade. For combination D < C < B < A; Neutral sits outside the
/// order and never changes a combined result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rating {
    A,
    B,
    C,
    D,
    #[serde(rename = "neutral")]
    Neutral,
}

impl Rating {
    pub const GRADES: [Rating; 4] = [Rating::A, Rating::B, Rating::C, Rating::D];

    /// Position in the order, higher is better; `None` for Neutral.
    pub fn rank(self) -> Option<u8> {
        match self {
            Rating::A => Some(3),
            Rating::B => Some(2),
            Rating::C => Some(1),
            Rating::D => Some(0),
            Rating::Neutral => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rating::A => "A",
            Rating::B => "B",
            Rating::C => "C",
            Rating::D => "D",
            Rating::Neutral => "neutral",
        }
    }

    /// Pessimistic combination: the worst non-Neutral rating, or Neutral if
    /// there is none.
    pub fn infimum<I: IntoIterator<Item = Rating>>(ratings: I) -> Rating {
        ratings
            .into_iter()
            .filter(|r| r.rank().is_some())
            .min_by_key(|r| r.rank())
            .unwrap_or(Rating::Neutral)
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Rating::A),
            "B" => Ok(Rating::B),
            "C" => Ok(Rating::C),
            "D" => Ok(Rating::D),
            "neutral" => Ok(Rating::Neutral),
            other => Err(Error::Schema(format!(
                "unknown rating '{other}' (expected A, B, C, D or neutral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Expressivity,
    Usability,
    Reliability,
    Runtime,
    Memory,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Expressivity,
        Category::Usability,
        Category::Reliability,
        Category::Runtime,
        Category::Memory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Expressivity => "expressivity",
            Category::Usability => "usability",
            Category::Reliability => "reliability",
            Category::Runtime => "runtime",
            Category::Memory => "memory",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown category '{s}'")))
    }
}

/// Thresholds `t1 < t2 < t3` splitting a resource axis into grades.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadgeScales {
    /// Seconds.
    pub runtime: [f64; 3],
    /// Megabytes.
    pub memory: [f64; 3],
    /// Watt-seconds.
    pub energy: [f64; 3],
}

impl Default for BadgeScales {
    fn default() -> Self {
        BadgeScales {
            runtime: [0.01, 1.0, 100.0],
            memory: [1.0, 100.0, 1000.0],
            energy: [0.1, 10.0, 1000.0],
        }
    }
}

pub(crate) fn validate_scale(scale: &[f64]) -> Result<()> {
    if scale.len() != 3 {
        return Err(Error::Schema(format!(
            "a badge scale needs 3 thresholds, got {}",
            scale.len()
        )));
    }
    if scale.iter().any(|t| !t.is_finite()) || !scale.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Schema(format!(
            "badge scale {scale:?} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// A if `value < t1`, B if `< t2`, C if `< t3`, else D.
pub fn measurement_badge(value: f64, scale: &[f64]) -> Result<Rating> {
    validate_scale(scale)?;
    if value.is_nan() {
        return Err(Error::InvalidArgument("cannot grade a NaN measurement".into()));
    }
    Ok(Rating::GRADES
        .into_iter()
        .zip(scale)
        .find(|(_, &t)| value < t)
        .map_or(Rating::D, |(r, _)| r))
}
