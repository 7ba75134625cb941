use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::mining::{arff_write_file, Class, Dataset};
use crate::reqmodel::RequirementSet;

use super::policy::{CaseThresholds, KnowledgeBasePolicy};
use super::LoopError;

/// One persisted monitoring iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbRecord {
    pub tick: u64,
    /// Clamped normalized values of the variables that were present.
    pub values: BTreeMap<String, f64>,
    /// Variables that were lost or decalibrated at this tick.
    pub faulty: BTreeSet<String>,
    /// Effective behavior state per requirement id.
    pub behaviors: BTreeMap<String, bool>,
}

/// Messages the Monitor sends to the Knowledge base.
#[derive(Debug, Clone)]
pub enum KbMessage {
    Record(KbRecord),
    Requirements { source: String, set: RequirementSet },
}

#[derive(Debug, Default)]
struct KbState {
    records: Vec<KbRecord>,
    tainted: BTreeSet<String>,
    active: BTreeSet<String>,
    requirements: BTreeMap<String, RequirementSet>,
    persisted: usize,
}

/// Single writer, many readers; every read is a consistent snapshot.
#[derive(Debug)]
pub struct KnowledgeBase {
    policy: RwLock<KnowledgeBasePolicy>,
    state: RwLock<KbState>,
}

impl KnowledgeBase {
    /// Starts with every persisted variable active.
    pub fn new(policy: KnowledgeBasePolicy) -> Self {
        let active = policy.variables.iter().cloned().collect();
        Self {
            policy: RwLock::new(policy),
            state: RwLock::new(KbState {
                active,
                ..KbState::default()
            }),
        }
    }

    pub fn policy(&self) -> KnowledgeBasePolicy {
        self.policy.read().clone()
    }

    pub fn set_policy(&self, policy: KnowledgeBasePolicy) {
        *self.policy.write() = policy;
    }

    pub fn min_uncertainty_iterations(&self) -> CaseThresholds {
        self.policy.read().min_uncertainty_iterations.clone()
    }

    pub fn handle(&self, message: KbMessage) -> Result<(), LoopError> {
        match message {
            KbMessage::Record(r) => self.append(r),
            KbMessage::Requirements { source, set } => {
                self.state.write().requirements.insert(source, set);
                Ok(())
            }
        }
    }

    pub fn append(&self, record: KbRecord) -> Result<(), LoopError> {
        let policy = self.policy.read();
        if let Some(unknown) = record.values.keys().find(|v| !policy.variables.contains(v)) {
            return Err(LoopError::UnknownVariable { name: unknown.clone() });
        }
        let mut state = self.state.write();
        if let Some(last) = state.records.last() {
            if record.tick <= last.tick {
                return Err(LoopError::OutOfOrder {
                    tick: record.tick,
                    last: last.tick,
                });
            }
        }
        state.tainted.extend(record.faulty.iter().cloned());
        state.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> Vec<KbRecord> {
        self.state.read().records.clone()
    }

    pub fn requirements(&self, source: &str) -> Option<RequirementSet> {
        self.state.read().requirements.get(source).cloned()
    }

    pub fn active_variables(&self) -> BTreeSet<String> {
        self.state.read().active.clone()
    }

    pub fn is_active(&self, variable: &str) -> bool {
        self.state.read().active.contains(variable)
    }

    /// Returns whether the set changed.
    pub fn set_active(&self, variable: &str, active: bool) -> bool {
        let mut state = self.state.write();
        if active {
            state.active.insert(variable.to_string())
        } else {
            state.active.remove(variable)
        }
    }

    /// Variables that have been faulty in any stored record.
    pub fn tainted(&self) -> BTreeSet<String> {
        self.state.read().tainted.clone()
    }

    /// Dataset for one requirement: the given variables that are active and
    /// never recorded while faulty, as named columns, with the requirement's
    /// behavior state as class. Rows missing a selected value are skipped.
    pub fn fetch(&self, requirement_id: &str, variables: &[String]) -> Result<Dataset, LoopError> {
        let policy = self.policy.read();
        let state = self.state.read();
        let known = state.requirements.values().any(|set| set.get(requirement_id).is_some())
            || state.records.iter().any(|r| r.behaviors.contains_key(requirement_id));
        if !known {
            return Err(LoopError::UnknownRequirement {
                id: requirement_id.to_string(),
            });
        }
        let selected: Vec<(&String, &String)> = policy
            .variables
            .iter()
            .zip(&policy.columns)
            .filter(|(v, _)| variables.contains(v) && state.active.contains(*v) && !state.tainted.contains(*v))
            .collect();
        let columns: Vec<&str> = selected.iter().map(|(_, c)| c.as_str()).collect();
        let mut ds = Dataset::numeric(requirement_id, &columns, &format!("{requirement_id}ExpectedBehaviorState"));
        let mut row = Vec::with_capacity(selected.len());
        for record in &state.records {
            let Some(&active) = record.behaviors.get(requirement_id) else {
                continue;
            };
            row.clear();
            row.extend(selected.iter().map_while(|(v, _)| record.values.get(*v).copied()));
            if row.len() == selected.len() {
                ds.push_numeric(&row, Class::from(active))?;
            }
        }
        Ok(ds)
    }

    /// Writes the dataset as `<relation>-<n>.arff` under the configured
    /// directory, if one is configured.
    pub fn persist(&self, ds: &Dataset) -> Result<Option<PathBuf>, LoopError> {
        let Some(dir) = self.policy.read().dataset_dir.clone() else {
            return Ok(None);
        };
        fs::create_dir_all(&dir).map_err(|e| LoopError::Io(format!("{}: {e}", dir.display())))?;
        let n = {
            let mut state = self.state.write();
            state.persisted += 1;
            state.persisted
        };
        let path = dir.join(format!("{}-{n}.arff", ds.relation()));
        arff_write_file(ds, &path)?;
        Ok(Some(path))
    }
}
