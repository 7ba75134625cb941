use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::operationalization::Operationalization;
use super::variable::VariableSpec;
use super::ReqModelError;

/// A context paired with the behavior expected while it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualRequirement {
    pub id: String,
    pub context_label: String,
    pub operationalization: Operationalization,
    pub behavior_id: String,
}

impl ContextualRequirement {
    pub fn new(
        id: impl Into<String>,
        context_label: impl Into<String>,
        operationalization: Operationalization,
        behavior_id: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            context_label: context_label.into(),
            operationalization,
            behavior_id: behavior_id.into(),
        }
    }
}

/// Observed state of an expected behavior at one tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorState {
    pub behavior_id: String,
    pub active: bool,
    pub driver_disabled: bool,
}

impl BehaviorState {
    pub fn new(behavior_id: impl Into<String>, active: bool, driver_disabled: bool) -> Result<Self, ReqModelError> {
        let behavior_id = behavior_id.into();
        if driver_disabled && active {
            return Err(ReqModelError::DisabledButActive { behavior_id });
        }
        Ok(Self {
            behavior_id,
            active,
            driver_disabled,
        })
    }

    pub fn active(behavior_id: impl Into<String>) -> Self {
        Self {
            behavior_id: behavior_id.into(),
            active: true,
            driver_disabled: false,
        }
    }

    pub fn inactive(behavior_id: impl Into<String>) -> Self {
        Self {
            behavior_id: behavior_id.into(),
            active: false,
            driver_disabled: false,
        }
    }
}

/// Requirements with unique ids, kept in declaration order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequirementSet {
    requirements: Vec<ContextualRequirement>,
}

impl RequirementSet {
    pub fn new(requirements: Vec<ContextualRequirement>) -> Result<Self, ReqModelError> {
        let mut seen = BTreeSet::new();
        for r in &requirements {
            if !seen.insert(r.id.as_str()) {
                return Err(ReqModelError::DuplicateRequirement { id: r.id.clone() });
            }
        }
        Ok(Self { requirements })
    }

    /// Fails if an operationalization names a variable without a spec.
    pub fn validate_variables(&self, specs: &[VariableSpec]) -> Result<(), ReqModelError> {
        for r in &self.requirements {
            for v in r.operationalization.variables() {
                if !specs.iter().any(|s| s.name == v) {
                    return Err(ReqModelError::UnknownVariable {
                        requirement: r.id.clone(),
                        variable: v.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ContextualRequirement> {
        self.requirements.iter().find(|r| r.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ContextualRequirement> {
        self.requirements.iter()
    }

    pub fn len(&self) -> usize {
        self.requirements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }

    /// Replaces one requirement's operationalization, returning the old one.
    pub fn replace_operationalization(
        &mut self,
        id: &str,
        op: Operationalization,
    ) -> Result<Operationalization, ReqModelError> {
        let r = self
            .requirements
            .iter_mut()
            .find(|r| r.id == id)
            .ok_or_else(|| ReqModelError::UnknownRequirement { id: id.to_string() })?;
        Ok(std::mem::replace(&mut r.operationalization, op))
    }
}

impl<'a> IntoIterator for &'a RequirementSet {
    type Item = &'a ContextualRequirement;
    type IntoIter = std::slice::Iter<'a, ContextualRequirement>;

    fn into_iter(self) -> Self::IntoIter {
        self.requirements.iter()
    }
}
