//! Values exchanged between loop elements. All are immutable once sent
//! and `Send`, so any element may run in its own thread.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::mining::EvalMeasures;
use crate::reqmodel::{BehaviorState, EnvironmentSnapshot, Operationalization, RequirementSet, UncertaintyCase};

/// What a managed element publishes each of its ticks.
#[derive(Debug, Clone)]
pub struct Frame {
    pub source: String,
    pub tick: u64,
    pub snapshot: EnvironmentSnapshot,
    pub requirements: RequirementSet,
    pub behaviors: Vec<BehaviorState>,
}

impl Frame {
    pub fn behavior(&self, behavior_id: &str) -> Option<&BehaviorState> {
        self.behaviors.iter().find(|b| b.behavior_id == behavior_id)
    }
}

/// What the Monitor saw when it emitted a symptom, kept so the triggering
/// predicate can be re-checked later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evidence {
    Requirement {
        operationalization: Operationalization,
        behavior_active: bool,
    },
    Sensor {
        variable: String,
        /// Pre-clamp normalized reading, absent when the sensor was lost.
        reading: Option<f64>,
        valid_min: f64,
        valid_max: f64,
        was_active: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Symptom {
    pub id: u64,
    pub requirement_id: Option<String>,
    pub case: UncertaintyCase,
    /// SACRE iteration that emitted it.
    pub tick: u64,
    pub source: String,
    /// Time since the loop epoch.
    pub emitted_at: Duration,
    pub snapshot: EnvironmentSnapshot,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestForChange {
    pub id: u64,
    pub requirement_id: String,
    pub candidate: Operationalization,
    /// Present exactly for the mined cases.
    pub measures: Option<EvalMeasures>,
    pub case: UncertaintyCase,
    pub symptom_ids: Vec<u64>,
    pub target: String,
    /// Records in the analyzed dataset; 0 when nothing was mined.
    pub dataset_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePlan {
    pub id: u64,
    pub rfc_id: u64,
    pub requirement_id: String,
    pub new_operationalization: Operationalization,
    pub target_managed_element: String,
    pub enacted_at: Option<Duration>,
}

/// A variable entering or leaving the active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetChange {
    pub variable: String,
    pub added: bool,
    pub symptom_ids: Vec<u64>,
    pub at: Duration,
}

/// Why Plan turned an RFC down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub rfc_id: u64,
    pub measure: String,
    pub value: f64,
    pub minimum: f64,
}
