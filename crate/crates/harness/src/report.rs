use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use sacre_vehicle::ScenarioKind;

use crate::runner::{Outcome, ReplicationResult};
use crate::stats::{mean_and_stddev, ppmcc};
use crate::HarnessError;

pub const REPORT_FILE: &str = "report.json";
pub const ADAPTATIONS_FILE: &str = "adaptations.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub scale: f64,
    pub replications: u32,
    pub realtime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMeasures {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub scenario_id: String,
    pub replications: usize,
    pub adapted: usize,
    pub mean_response_ms: Option<f64>,
    pub stddev_response_ms: Option<f64>,
    /// Set when the deviation rests on fewer than two samples.
    pub note: Option<String>,
    pub mean_measures: Option<MeanMeasures>,
    pub mean_dataset_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metadata: RunMetadata,
    pub scenarios: Vec<ScenarioMetrics>,
    /// Correlation of dataset size with mean response time over the
    /// scenarios resolved by mining.
    pub ppmcc: Option<f64>,
    pub ppmcc_note: Option<String>,
}

/// Per-scenario means and deviations, plus the size/time correlation.
pub fn aggregate(metadata: RunMetadata, results: &[ReplicationResult]) -> MetricsReport {
    let mut by_scenario: BTreeMap<&str, Vec<&ReplicationResult>> = BTreeMap::new();
    for r in results {
        by_scenario.entry(r.scenario_id.as_str()).or_default().push(r);
    }
    let mut scenarios = Vec::new();
    for (id, rs) in by_scenario {
        let times: Vec<f64> = rs.iter().filter_map(|r| r.response_time_ms()).collect();
        let stats = mean_and_stddev(&times);
        let measures: Vec<_> = rs
            .iter()
            .filter_map(|r| r.adaptations.iter().find_map(|a| a.measures))
            .collect();
        let sizes: Vec<f64> = rs
            .iter()
            .filter_map(|r| r.adaptations.iter().find_map(|a| a.dataset_size))
            .map(|n| n as f64)
            .collect();
        scenarios.push(ScenarioMetrics {
            scenario_id: id.to_string(),
            replications: rs.len(),
            adapted: rs.iter().filter(|r| r.outcome == Outcome::Adapted).count(),
            mean_response_ms: stats.map(|s| s.0),
            stddev_response_ms: stats.map(|s| s.1),
            note: (times.len() == 1).then(|| "single sample: deviation reported as 0".to_string()),
            mean_measures: (!measures.is_empty()).then(|| MeanMeasures {
                precision: measures.iter().map(|m| m.precision).mean(),
                recall: measures.iter().map(|m| m.recall).mean(),
                f_measure: measures.iter().map(|m| m.f_measure).mean(),
            }),
            mean_dataset_size: (!sizes.is_empty()).then(|| sizes.iter().mean()),
        });
    }

    let pairs: Vec<(f64, f64)> = scenarios
        .iter()
        .filter(|s| s.scenario_id.parse::<ScenarioKind>().is_ok_and(|k| k.mines()))
        .filter_map(|s| Some((s.mean_dataset_size?, s.mean_response_ms?)))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (ppmcc, ppmcc_note) = match ppmcc(&xs, &ys) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    MetricsReport {
        metadata,
        scenarios,
        ppmcc,
        ppmcc_note,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub results: Vec<ReplicationResult>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    replication: u32,
    iteration: u64,
    requirement: Option<&'a str>,
    case: &'a str,
    response_ms: f64,
    precision: Option<f64>,
    recall: Option<f64>,
    f_measure: Option<f64>,
    dataset_size: Option<usize>,
    operationalization: &'a str,
}

/// Writes `report.json` and `adaptations.csv` into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    serde_json::to_writer_pretty(File::create(dir.join(REPORT_FILE))?, report)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join(ADAPTATIONS_FILE))?;
    for r in &report.results {
        for a in &r.adaptations {
            w.serialize(CsvRow {
                scenario: &r.scenario_id,
                replication: r.replication_index,
                iteration: a.iteration,
                requirement: a.requirement_id.as_deref(),
                case: &a.case,
                response_ms: a.response_time_ms,
                precision: a.measures.map(|m| m.precision),
                recall: a.measures.map(|m| m.recall),
                f_measure: a.measures.map(|m| m.f_measure),
                dataset_size: a.dataset_size,
                operationalization: &a.operationalization,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<RunReport, HarnessError> {
    let path = dir.join(REPORT_FILE);
    let file = File::open(&path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(file)?)
}
