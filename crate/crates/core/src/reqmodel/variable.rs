//! Sensor variable specifications, normalization and preprocessing.

use serde::{Deserialize, Serialize};

use super::ReqModelError;

/// eyesState samples below this fraction count as "eyes closed" for perclos.
pub const PERCLOS_CLOSED_BELOW: f64 = 0.20;

/// Default perclos window: 3 simulated seconds at 20 ticks/s.
pub const DEFAULT_PERCLOS_WINDOW: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Preprocessing {
    None,
    /// Value is the perclos of the last `window_ticks` eyesState samples.
    PerclosWindow { window_ticks: usize },
}

/// Normalization bounds and validity thresholds for one sensor variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub raw_min: f64,
    pub raw_max: f64,
    pub valid_min: f64,
    pub valid_max: f64,
    pub preprocessing: Preprocessing,
}

impl VariableSpec {
    pub fn new(
        name: impl Into<String>,
        raw_min: f64,
        raw_max: f64,
        valid_min: f64,
        valid_max: f64,
        preprocessing: Preprocessing,
    ) -> Result<Self, ReqModelError> {
        let spec = Self {
            name: name.into(),
            raw_min,
            raw_max,
            valid_min,
            valid_max,
            preprocessing,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with validity thresholds spanning the whole normalized range.
    pub fn with_range(name: impl Into<String>, raw_min: f64, raw_max: f64) -> Result<Self, ReqModelError> {
        Self::new(name, raw_min, raw_max, 0.0, 1.0, Preprocessing::None)
    }

    pub fn validate(&self) -> Result<(), ReqModelError> {
        let invalid = |reason: &str| ReqModelError::InvalidSpec {
            variable: self.name.clone(),
            reason: reason.to_string(),
        };
        if !is_identifier(&self.name) {
            return Err(invalid("name is not an identifier"));
        }
        if !(self.raw_min.is_finite() && self.raw_max.is_finite()) || self.raw_min >= self.raw_max {
            return Err(invalid("raw_min must be below raw_max"));
        }
        if !(0.0..=1.0).contains(&self.valid_min)
            || !(0.0..=1.0).contains(&self.valid_max)
            || self.valid_min > self.valid_max
        {
            return Err(invalid("validity thresholds must satisfy 0 <= min <= max <= 1"));
        }
        if let Preprocessing::PerclosWindow { window_ticks: 0 } = self.preprocessing {
            return Err(invalid("perclos window must be positive"));
        }
        Ok(())
    }

    /// Min-max normalization without clamping. Anomaly checks run on this value.
    pub fn normalize_unclamped(&self, raw: f64) -> f64 {
        (raw - self.raw_min) / (self.raw_max - self.raw_min)
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        normalize(raw, self)
    }

    pub fn is_valid(&self, unclamped: f64) -> bool {
        unclamped >= self.valid_min && unclamped <= self.valid_max
    }
}

/// Linear min-max normalization clamped into [0, 1].
pub fn normalize(raw: f64, spec: &VariableSpec) -> f64 {
    spec.normalize_unclamped(raw).clamp(0.0, 1.0)
}

/// Fraction of samples in the window below [`PERCLOS_CLOSED_BELOW`].
///
/// An empty window yields 0.
pub fn preprocess_perclos(eyes_window: &[f64], window_ticks: usize) -> f64 {
    let start = eyes_window.len().saturating_sub(window_ticks);
    let considered = &eyes_window[start..];
    if considered.is_empty() {
        return 0.0;
    }
    let closed = considered.iter().filter(|&&v| v < PERCLOS_CLOSED_BELOW).count();
    closed as f64 / considered.len() as f64
}

/// `[a-zA-Z][a-zA-Z0-9]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric())
}
