//! Element handles, observer wiring and the setup choreography.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use tracing::debug;

use super::policy::{PolicySet, Role, RolePolicy};
use super::LoopError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Health {
    Ok,
    NoOk,
}

impl fmt::Display for Health {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Health::Ok => "OK",
            Health::NoOk => "NO_OK",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetupPhase {
    Initialization,
    Connections,
    FirstNotify,
    ManagedElementConnections,
    Start,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementHandle {
    pub id: String,
    pub role: Role,
    pub state: Health,
    pub policy_ref: Option<String>,
    /// Elements consuming from this one.
    pub observers: Vec<String>,
    /// Elements (or managed elements) this one consumes from.
    pub observables: Vec<String>,
}

/// Producer to consumer links between roles; every instance of the
/// producer role is wired to every instance of the consumer role.
const EDGES: [(Role, Role); 7] = [
    (Role::Sensors, Role::Monitor),
    (Role::Monitor, Role::Analyze),
    (Role::Monitor, Role::KnowledgeBase),
    (Role::KnowledgeBase, Role::Analyze),
    (Role::Analyze, Role::Plan),
    (Role::Plan, Role::Execute),
    (Role::Execute, Role::Effectors),
];

#[derive(Debug, Clone)]
pub struct Topology {
    handles: Vec<ElementHandle>,
    phases: Vec<SetupPhase>,
}

impl Topology {
    /// Runs the first four setup phases. `Start` is recorded by
    /// [`Topology::start`].
    pub fn setup(policies: &PolicySet, managed_elements: &[String]) -> Result<Self, LoopError> {
        let missing = policies.manager.missing_roles();
        if !missing.is_empty() {
            return Err(LoopError::MissingRoles { roles: missing });
        }

        let mut topo = Topology {
            handles: Vec::new(),
            phases: vec![SetupPhase::Initialization],
        };
        let mut counters: BTreeMap<Role, usize> = BTreeMap::new();
        for e in &policies.manager.elements {
            let n = counters.entry(e.role).or_insert(0);
            *n += 1;
            let id = format!("{}-{n}", e.role.key());
            let policy = policies
                .policy(&e.policy_ref)
                .filter(|p| p.role() == e.role)
                .ok_or_else(|| LoopError::MissingPolicy {
                    element: id.clone(),
                    reference: e.policy_ref.clone(),
                })?;
            let state = if policy.problem().is_some() { Health::NoOk } else { Health::Ok };
            topo.handles.push(ElementHandle {
                id,
                role: e.role,
                state,
                policy_ref: Some(e.policy_ref.clone()),
                observers: Vec::new(),
                observables: Vec::new(),
            });
        }
        for role in [Role::Sensors, Role::Effectors] {
            topo.handles.push(ElementHandle {
                id: format!("{}-1", role.key()),
                role,
                state: Health::Ok,
                policy_ref: None,
                observers: Vec::new(),
                observables: Vec::new(),
            });
        }

        topo.phases.push(SetupPhase::Connections);
        for (producer, consumer) in EDGES {
            for p in topo.ids(producer) {
                for c in topo.ids(consumer) {
                    topo.attach(&p, &c);
                }
            }
        }

        topo.phases.push(SetupPhase::FirstNotify);
        for h in &topo.handles {
            if h.state == Health::NoOk {
                let reason = h
                    .policy_ref
                    .as_deref()
                    .and_then(|r| policies.policy(r))
                    .and_then(RolePolicy::problem)
                    .unwrap_or_else(|| "not healthy".into());
                return Err(LoopError::ElementNotOk {
                    id: h.id.clone(),
                    reason,
                });
            }
        }

        topo.phases.push(SetupPhase::ManagedElementConnections);
        for h in &mut topo.handles {
            if matches!(h.role, Role::Sensors | Role::Effectors) {
                h.observables.extend(managed_elements.iter().cloned());
            }
        }
        debug!(elements = topo.handles.len(), "loop topology ready");
        Ok(topo)
    }

    pub fn start(&mut self) {
        if !self.is_started() {
            self.phases.push(SetupPhase::Start);
        }
    }

    pub fn is_started(&self) -> bool {
        self.phases.last() == Some(&SetupPhase::Start)
    }

    pub fn phases(&self) -> &[SetupPhase] {
        &self.phases
    }

    pub fn handles(&self) -> &[ElementHandle] {
        &self.handles
    }

    pub fn handle(&self, id: &str) -> Option<&ElementHandle> {
        self.handles.iter().find(|h| h.id == id)
    }

    /// Ids of all elements of a role, in creation order.
    pub fn ids(&self, role: Role) -> Vec<String> {
        self.handles.iter().filter(|h| h.role == role).map(|h| h.id.clone()).collect()
    }

    /// The element of a role that currently does the work.
    pub fn first_healthy(&self, role: Role) -> Option<&str> {
        self.handles
            .iter()
            .find(|h| h.role == role && h.state == Health::Ok)
            .map(|h| h.id.as_str())
    }

    fn attach(&mut self, producer: &str, consumer: &str) {
        for h in &mut self.handles {
            if h.id == producer && !h.observers.iter().any(|o| o == consumer) {
                h.observers.push(consumer.to_string());
            }
            if h.id == consumer && !h.observables.iter().any(|o| o == producer) {
                h.observables.push(producer.to_string());
            }
        }
    }

    pub fn set_state(&mut self, id: &str, state: Health) -> Result<(), LoopError> {
        let h = self
            .handles
            .iter_mut()
            .find(|h| h.id == id)
            .ok_or_else(|| LoopError::UnknownElement { id: id.to_string() })?;
        h.state = state;
        Ok(())
    }

    pub fn set_policy_ref(&mut self, id: &str, reference: String) -> Result<(), LoopError> {
        let h = self
            .handles
            .iter_mut()
            .find(|h| h.id == id)
            .ok_or_else(|| LoopError::UnknownElement { id: id.to_string() })?;
        h.policy_ref = Some(reference);
        Ok(())
    }

    /// OK iff every role has an OK element that holds a policy.
    pub fn verify_health(&self) -> Result<(), LoopError> {
        let missing: Vec<Role> = Role::MAPE_K
            .into_iter()
            .filter(|r| {
                !self
                    .handles
                    .iter()
                    .any(|h| h.role == *r && h.state == Health::Ok && h.policy_ref.is_some())
            })
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(LoopError::Unhealthy { missing })
        }
    }

    /// Consumers missing from their producer's observer list, as
    /// (producer, consumer) pairs.
    pub fn unwired(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (producer, consumer) in EDGES {
            for p in self.handles.iter().filter(|h| h.role == producer) {
                for c in self.handles.iter().filter(|h| h.role == consumer) {
                    if !p.observers.contains(&c.id) || !c.observables.contains(&p.id) {
                        out.push((p.id.clone(), c.id.clone()));
                    }
                }
            }
        }
        out
    }
}
