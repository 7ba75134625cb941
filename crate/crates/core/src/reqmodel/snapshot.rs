use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::variable::VariableSpec;

/// Normalized sensor values at one simulated tick.
///
/// `values` holds the clamped values that feed evaluation and the dataset;
/// `unclamped` holds the same variables before clamping so validity
/// thresholds can see excursions outside [0, 1]. A variable missing from
/// both maps is a lost sensor.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSnapshot {
    pub tick: u64,
    values: BTreeMap<String, f64>,
    unclamped: BTreeMap<String, f64>,
}

impl EnvironmentSnapshot {
    pub fn new(tick: u64) -> Self {
        Self {
            tick,
            ..Self::default()
        }
    }

    /// Snapshot from already-normalized values; they are clamped on insert.
    pub fn from_values<'a>(tick: u64, values: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        let mut snapshot = Self::new(tick);
        for (name, value) in values {
            snapshot.insert_normalized(name, value);
        }
        snapshot
    }

    /// Records an unclamped normalized value.
    pub fn insert_normalized(&mut self, name: &str, unclamped: f64) {
        self.values.insert(name.to_string(), unclamped.clamp(0.0, 1.0));
        self.unclamped.insert(name.to_string(), unclamped);
    }

    /// Normalizes a raw reading with `spec` and records it.
    pub fn insert_raw(&mut self, spec: &VariableSpec, raw: f64) {
        self.insert_normalized(&spec.name, spec.normalize_unclamped(raw));
    }

    pub fn remove(&mut self, name: &str) {
        self.values.remove(name);
        self.unclamped.remove(name);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn get_unclamped(&self, name: &str) -> Option<f64> {
        self.unclamped.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}
