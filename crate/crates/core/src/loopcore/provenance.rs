//! Symptom → RFC → plan chains, kept so every enactment can be traced back
//! to the observations that caused it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::reqmodel::CaseKind;

use super::messages::{ChangePlan, Evidence, RequestForChange, Symptom};

/// Re-checks the uncertainty predicate a symptom claims held.
pub fn symptom_predicate_held(symptom: &Symptom) -> bool {
    let kind = symptom.case.kind();
    match &symptom.evidence {
        Evidence::Requirement {
            operationalization,
            behavior_active,
        } => {
            let truth = operationalization.holds_on(|v| symptom.snapshot.get(v));
            match kind {
                CaseKind::Case1 => operationalization.is_empty(),
                CaseKind::Case3 => truth == Some(true) && !behavior_active,
                CaseKind::Case4 => truth == Some(false) && *behavior_active,
                _ => false,
            }
        }
        Evidence::Sensor {
            variable,
            reading,
            valid_min,
            valid_max,
            was_active,
        } => {
            let in_range = reading.is_some_and(|v| (*valid_min..=*valid_max).contains(&v));
            symptom.case.variable() == Some(variable.as_str())
                && match kind {
                    CaseKind::Case2a => reading.is_none(),
                    CaseKind::Case2b => reading.is_some() && !in_range,
                    CaseKind::Case2c => in_range && !was_active,
                    _ => false,
                }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProvenanceLog {
    symptoms: BTreeMap<u64, Symptom>,
    rfcs: BTreeMap<u64, RequestForChange>,
    plans: BTreeMap<u64, ChangePlan>,
}

impl ProvenanceLog {
    pub fn record_symptom(&mut self, s: &Symptom) {
        self.symptoms.insert(s.id, s.clone());
    }

    pub fn record_rfc(&mut self, r: &RequestForChange) {
        self.rfcs.insert(r.id, r.clone());
    }

    pub fn record_plan(&mut self, p: &ChangePlan) {
        self.plans.insert(p.id, p.clone());
    }

    pub fn symptom(&self, id: u64) -> Option<&Symptom> {
        self.symptoms.get(&id)
    }

    pub fn rfc(&self, id: u64) -> Option<&RequestForChange> {
        self.rfcs.get(&id)
    }

    pub fn plans(&self) -> impl Iterator<Item = &ChangePlan> {
        self.plans.values()
    }

    /// Checks that a plan traces to one RFC, which traces to at least one
    /// recorded symptom whose predicate held.
    pub fn verify_chain(&self, plan_id: u64) -> Result<(), String> {
        let plan = self.plans.get(&plan_id).ok_or(format!("plan {plan_id} not recorded"))?;
        let rfc = self
            .rfcs
            .get(&plan.rfc_id)
            .ok_or(format!("plan {plan_id}: rfc {} not recorded", plan.rfc_id))?;
        if rfc.requirement_id != plan.requirement_id {
            return Err(format!("plan {plan_id}: requirement differs from its rfc"));
        }
        if rfc.symptom_ids.is_empty() {
            return Err(format!("rfc {} has no symptoms", rfc.id));
        }
        for sid in &rfc.symptom_ids {
            let s = self.symptoms.get(sid).ok_or(format!("rfc {}: symptom {sid} not recorded", rfc.id))?;
            if s.case.kind() != rfc.case.kind() {
                return Err(format!("symptom {sid} case differs from rfc {}", rfc.id));
            }
            if !symptom_predicate_held(s) {
                return Err(format!("symptom {sid}: predicate did not hold"));
            }
        }
        Ok(())
    }

    pub fn verify_all(&self) -> Result<usize, String> {
        for id in self.plans.keys() {
            self.verify_chain(*id)?;
        }
        Ok(self.plans.len())
    }
}
