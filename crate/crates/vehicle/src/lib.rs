//! The managed smart vehicle.
//!
//! A requirements-evaluation loop at 20 ticks per simulated second reads
//! sensor traces, decides which contexts hold, drives three actuators that
//! the driver can override, and accepts new operationalizations from the
//! adaptation loop between ticks.

pub mod actuator;
pub mod config;
pub mod generator;
pub mod trace;
pub mod vehicle;

use thiserror::Error;

pub use actuator::{effective_active, Action, Actuator, ActuatorState, DriverOverride};
pub use config::VehicleConfig;
pub use generator::{generate, GeneratedScenario, ScenarioKind, ScenarioSpec, SACRE_PERIOD_MS, VEHICLE_PERIOD_MS};
pub use trace::{DriverAction, SensorTraceRow};
pub use vehicle::{Simulation, Vehicle, VehicleOutput};

#[derive(Debug, Error)]
pub enum VehicleError {
    #[error("{file} line {line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("unknown requirement `{id}`")]
    UnknownRequirement { id: String },
    #[error("plan targets `{target}`, not this vehicle")]
    WrongTarget { target: String },
    #[error("`{action}` is not allowed on {actuator}")]
    InvalidAction { actuator: Actuator, action: Action },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("{scenario}: {iterations} iterations before injection, at least {minimum} needed")]
    BudgetTooSmall {
        scenario: ScenarioKind,
        iterations: u64,
        minimum: u64,
    },
    #[error(transparent)]
    Model(#[from] sacre_core::reqmodel::ReqModelError),
}
