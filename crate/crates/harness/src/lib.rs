//! Experiment driver: runs the vehicle scenarios against the adaptation
//! loop, aggregates response times and mining measures, and persists the
//! results.

pub mod expect;
pub mod report;
pub mod runner;
pub mod stats;

pub use expect::{agreement, expected_adaptation, expected_strips};
pub use report::{aggregate, read_report, write_report, MetricsReport, RunMetadata, RunReport, ScenarioMetrics};
pub use runner::{run_replication, run_scenario, AdaptationRow, Outcome, ReplicationResult, RunOptions, GRACE_ITERATIONS};
pub use stats::{mean_and_stddev, ppmcc, sample_size};

use sacre_core::loopcore::LoopError;
use sacre_core::reqmodel::ReqModelError;
use sacre_vehicle::VehicleError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad flags, an unusable scale, or a missing input.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Vehicle(VehicleError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Model(#[from] ReqModelError),
    #[error("{0}")]
    Stats(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<VehicleError> for HarnessError {
    fn from(e: VehicleError) -> Self {
        match e {
            VehicleError::BudgetTooSmall { .. } | VehicleError::UnknownScenario(_) => HarnessError::Config(e.to_string()),
            VehicleError::Config { ref key, .. } if key == "scale" => HarnessError::Config(e.to_string()),
            other => HarnessError::Vehicle(other),
        }
    }
}
