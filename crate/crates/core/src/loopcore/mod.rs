//! The MAPE-K loop: policies, message types, the knowledge base, the four
//! processing elements, the element topology and the runtime that drives
//! them against managed elements.

mod elements;
mod kb;
mod messages;
mod policy;
mod provenance;
mod runtime;
mod topology;

use thiserror::Error;

use crate::mining::MiningError;

pub use elements::{Analysis, Analyze, Clock, Execute, IdGen, Monitor, MonitorInput, MonitorOutput, Plan};
pub use kb::{KbMessage, KbRecord, KnowledgeBase};
pub use messages::{ActiveSetChange, ChangePlan, Evidence, Frame, Rejection, RequestForChange, Symptom};
pub use policy::{
    read_properties, AnalyzePolicy, CaseThresholds, ElementAssignment, ExecutePolicy, KnowledgeBasePolicy,
    ManagerPolicy, MonitorPolicy, PlanPolicy, PolicySet, Role, RolePolicy,
};
pub use provenance::{symptom_predicate_held, ProvenanceLog};
pub use runtime::{Adaptation, AdaptationKind, IterationReport, Loop, ManagedLink};
pub use topology::{ElementHandle, Health, SetupPhase, Topology};

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("policy key `{key}`: {reason}")]
    Policy { key: String, reason: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("variable `{name}` is not persisted by the knowledge base")]
    UnknownVariable { name: String },
    #[error("record tick {tick} does not follow tick {last}")]
    OutOfOrder { tick: u64, last: u64 },
    #[error("unknown requirement `{id}`")]
    UnknownRequirement { id: String },
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error("setup refused: structure has no {}", join_roles(.roles))]
    MissingRoles { roles: Vec<Role> },
    #[error("setup refused: element `{element}` references missing policy `{reference}`")]
    MissingPolicy { element: String, reference: String },
    #[error("setup refused: element `{id}` is NO_OK: {reason}")]
    ElementNotOk { id: String, reason: String },
    #[error("unhealthy loop: no OK {}", join_roles(.missing))]
    Unhealthy { missing: Vec<Role> },
    #[error("unknown element `{id}`")]
    UnknownElement { id: String },
    #[error("element `{id}` is a {actual}, not a {expected}")]
    RoleMismatch { id: String, expected: Role, actual: Role },
    #[error("loop has not been started")]
    NotStarted,
    #[error("change plan {plan_id} was already enacted")]
    AlreadyEnacted { plan_id: u64 },
    #[error("no effector for managed element `{target}`")]
    UnknownTarget { target: String },
    #[error("dispatch to `{target}` failed: {reason}")]
    Dispatch { target: String, reason: String },
}

fn join_roles(roles: &[Role]) -> String {
    roles.iter().map(Role::to_string).collect::<Vec<_>>().join(", ")
}
