//! Contextual requirements, sensor variables and the uncertainty detectors.
//!
//! Everything here is an immutable value or a pure function; the loop
//! elements share these freely across threads.

mod operationalization;
mod requirement;
mod snapshot;
mod uncertainty;
mod variable;

pub use operationalization::{
    eval_operationalization, strip_variable, AtomicCondition, Clause, CmpOp, Operationalization, Truth,
    EQUALITY_TOLERANCE,
};
pub use requirement::{BehaviorState, ContextualRequirement, RequirementSet};
pub use snapshot::EnvironmentSnapshot;
pub use uncertainty::{assess_satisfaction, detect_sensor_anomaly, CaseKind, SensorStatus, UncertaintyCase, Verdict};
pub use variable::{
    is_identifier, normalize, preprocess_perclos, Preprocessing, VariableSpec, DEFAULT_PERCLOS_WINDOW,
    PERCLOS_CLOSED_BELOW,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReqModelError {
    #[error("invalid variable spec `{variable}`: {reason}")]
    InvalidSpec { variable: String, reason: String },
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("conflicting bounds on `{variable}` within one conjunction")]
    ConflictingBounds { variable: String },
    #[error("requirement `{requirement}` references undeclared variable `{variable}`")]
    UnknownVariable { requirement: String, variable: String },
    #[error("duplicate requirement id `{id}`")]
    DuplicateRequirement { id: String },
    #[error("unknown requirement `{id}`")]
    UnknownRequirement { id: String },
    #[error("requirement `{requirement}` expects behavior `{expected}`, got `{found}`")]
    BehaviorMismatch {
        requirement: String,
        expected: String,
        found: String,
    },
    #[error("behavior `{behavior_id}` cannot be active while driver-disabled")]
    DisabledButActive { behavior_id: String },
}
