use std::path::Path;
use std::thread;

use crossbeam_channel::unbounded;
use serde::{Deserialize, Serialize};
use tracing::{debug, info, warn};

use sacre_core::loopcore::{AdaptationKind, Loop, ManagedLink, PolicySet};
use sacre_core::mining::EvalMeasures;
use sacre_core::reqmodel::{assess_satisfaction, CaseKind, Verdict};
use sacre_vehicle::generator::vehicle_tick_at;
use sacre_vehicle::trace::{read_actions_file, read_sensor_file};
use sacre_vehicle::{generate, ScenarioKind, Simulation, Vehicle, VehicleConfig};

use crate::expect::{agreement, expected_adaptation};
use crate::HarnessError;

/// Iterations the run continues after the first enactment.
pub const GRACE_ITERATIONS: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRow {
    pub iteration: u64,
    /// Absent for active-set changes.
    pub requirement_id: Option<String>,
    pub case: String,
    pub response_time_ms: f64,
    pub measures: Option<EvalMeasures>,
    /// The enacted operationalization, or `+var` / `-var` for active-set changes.
    pub operationalization: String,
    pub dataset_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "reason")]
pub enum Outcome {
    Adapted,
    NoAdaptation,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub scenario_id: String,
    pub replication_index: u32,
    pub seed: u64,
    pub injection_iteration: u64,
    pub iterations_run: u64,
    pub adaptations: Vec<AdaptationRow>,
    pub outcome: Outcome,
    /// Calls into the rule learner over the whole run.
    pub learner_calls: u64,
    /// Operationalization changes sent to the vehicle.
    pub change_plans: usize,
    /// Symptoms for an adapted requirement after its adaptation.
    pub grace_symptoms: usize,
    /// Iteration of the first requirement-level (Case 3 or 4) symptom.
    pub first_mining_symptom: Option<u64>,
    /// Non-satisfied verdicts seen before the injection.
    pub pre_injection_unsatisfied: usize,
    /// Agreement of the enacted operationalization with the expected one
    /// over the records in the knowledge base.
    pub agreement: Option<f64>,
    pub provenance_verified: bool,
    pub rejections: usize,
}

impl ReplicationResult {
    /// Response time of the first adaptation.
    pub fn response_time_ms(&self) -> Option<f64> {
        self.adaptations.first().map(|a| a.response_time_ms)
    }

    /// Iterations between the injection and the first adaptation.
    pub fn iterations_to_adapt(&self) -> Option<u64> {
        self.adaptations.first().map(|a| a.iteration.saturating_sub(self.injection_iteration))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub scale: f64,
    pub realtime: bool,
}

/// Runs `replications` independent replications of one scenario, writing
/// each one's files under `out/<scenario>/rep-<r>/`.
pub fn run_scenario(
    kind: ScenarioKind,
    replications: u32,
    options: RunOptions,
    out: &Path,
) -> Result<Vec<ReplicationResult>, HarnessError> {
    // refuse an unusable scale before touching the file system
    generate(kind, options.seed, options.scale)?;
    let mut results = Vec::with_capacity(replications as usize);
    for r in 0..replications {
        let dir = out.join(kind.id()).join(format!("rep-{r}"));
        let seed = options.seed + u64::from(r);
        let result = match run_replication(kind, r, seed, options, &dir) {
            Ok(result) => result,
            Err(e @ HarnessError::Config(_)) => return Err(e),
            Err(e) => {
                warn!(scenario = %kind, replication = r, error = %e, "replication failed");
                ReplicationResult::failed(kind, r, seed, e.to_string())
            }
        };
        info!(
            scenario = %kind,
            replication = r,
            outcome = ?result.outcome,
            response_ms = ?result.response_time_ms(),
            "replication done"
        );
        results.push(result);
    }
    Ok(results)
}

impl ReplicationResult {
    fn failed(kind: ScenarioKind, r: u32, seed: u64, reason: String) -> Self {
        Self {
            scenario_id: kind.id().into(),
            replication_index: r,
            seed,
            injection_iteration: 0,
            iterations_run: 0,
            adaptations: Vec::new(),
            outcome: Outcome::Error(reason),
            learner_calls: 0,
            change_plans: 0,
            grace_symptoms: 0,
            first_mining_symptom: None,
            pre_injection_unsatisfied: 0,
            agreement: None,
            provenance_verified: false,
            rejections: 0,
        }
    }
}

fn row(a: &sacre_core::loopcore::Adaptation) -> AdaptationRow {
    let (requirement_id, measures, operationalization, dataset_size) = match &a.kind {
        AdaptationKind::Reoperationalized { rfc, plan } => (
            Some(plan.requirement_id.clone()),
            rfc.measures,
            plan.new_operationalization.to_string(),
            Some(rfc.dataset_size),
        ),
        AdaptationKind::ActiveSet(change) => (
            None,
            None,
            format!("{}{}", if change.added { '+' } else { '-' }, change.variable),
            None,
        ),
    };
    AdaptationRow {
        iteration: a.iteration,
        requirement_id,
        case: a.case.kind().key().to_string(),
        response_time_ms: a.response_time.as_secs_f64() * 1000.0,
        measures,
        operationalization,
        dataset_size,
    }
}

/// One replication: generate the files, read them back, and run the
/// vehicle and the adaptation loop on a shared virtual clock.
pub fn run_replication(
    kind: ScenarioKind,
    index: u32,
    seed: u64,
    options: RunOptions,
    dir: &Path,
) -> Result<ReplicationResult, HarnessError> {
    let generated = generate(kind, seed, options.scale)?;
    let files = generated.write(dir)?;
    let spec = &generated.spec;

    let vehicle = Vehicle::new(VehicleConfig::load(&files.config)?)?;
    let vehicle_id = vehicle.id().to_string();
    let mut sim = Simulation::new(vehicle, read_sensor_file(&files.sensors)?, read_actions_file(&files.actions)?);

    let (frame_tx, frame_rx) = unbounded();
    let (plan_tx, plan_rx) = unbounded();
    let link = ManagedLink {
        id: vehicle_id,
        frames: frame_rx,
        effector: plan_tx,
    };
    let mut lp = Loop::setup(PolicySet::default(), vec![link])?;
    lp.start();
    let kb = lp.knowledge_base().ok_or_else(|| HarnessError::Config("no knowledge base".into()))?;
    for v in &spec.inactive_variables {
        kb.set_active(v, false);
    }

    let mut latest = None;
    let mut pre_injection_unsatisfied = 0;
    let mut grace_symptoms = 0;
    let mut first_adaptation: Option<u64> = None;
    let mut first_mining_symptom: Option<u64> = None;
    let mut adapted: Vec<String> = Vec::new();
    let mut iterations_run = 0;

    for i in 1..=spec.total_iterations {
        let horizon = vehicle_tick_at(i);
        while !sim.is_complete() && latest.as_ref().is_none_or(|o: &sacre_vehicle::VehicleOutput| o.tick < horizon) {
            for plan in plan_rx.try_iter() {
                sim.vehicle.apply_adaptation(&plan)?;
            }
            let Some(out) = sim.step() else { break };
            let out = out?;
            let _ = frame_tx.send(sim.vehicle.frame(&out));
            latest = Some(out);
        }
        if let Some(out) = &latest {
            if out.tick < spec.injection_tick {
                for (r, b) in sim.vehicle.requirements().iter().zip(&out.behaviors) {
                    if assess_satisfaction(r, out.contexts[&r.id], b)? != Verdict::Satisfied {
                        pre_injection_unsatisfied += 1;
                    }
                }
            }
        }

        let report = lp.iterate()?;
        iterations_run = i;
        if first_mining_symptom.is_none()
            && report
                .symptoms
                .iter()
                .any(|s| matches!(s.case.kind(), CaseKind::Case3 | CaseKind::Case4))
        {
            first_mining_symptom = Some(i);
        }
        if first_adaptation.is_some() {
            grace_symptoms += report
                .symptoms
                .iter()
                .filter(|s| s.requirement_id.as_ref().is_some_and(|r| adapted.contains(r)))
                .count();
        }
        for a in &report.adaptations {
            debug!(iteration = i, case = ?a.case, "adaptation enacted");
            if let Some(r) = a.requirement_id() {
                adapted.push(r.to_string());
            }
        }
        if first_adaptation.is_none() && !report.adaptations.is_empty() {
            first_adaptation = Some(i);
        }
        if options.realtime {
            thread::sleep(lp.period());
        }
        if first_adaptation.is_some_and(|f| i >= f + GRACE_ITERATIONS) {
            break;
        }
    }
    // deliver anything still in flight so the vehicle ends consistent
    for plan in plan_rx.try_iter() {
        sim.vehicle.apply_adaptation(&plan)?;
    }

    let adaptations: Vec<AdaptationRow> = lp.adaptations().iter().map(row).collect();
    let records = kb.records();
    let agreement = expected_adaptation(kind).and_then(|(req, expected)| {
        let enacted = lp.adaptations().iter().find_map(|a| match &a.kind {
            AdaptationKind::Reoperationalized { plan, .. } if plan.requirement_id == req => {
                Some(&plan.new_operationalization)
            }
            _ => None,
        })?;
        agreement(enacted, &expected, &records)
    });
    let change_plans = lp.provenance().plans().count();
    let provenance_verified = lp.provenance().verify_all().is_ok_and(|n| n == change_plans);

    Ok(ReplicationResult {
        scenario_id: kind.id().into(),
        replication_index: index,
        seed,
        injection_iteration: spec.injection_iteration,
        iterations_run,
        outcome: if adaptations.is_empty() {
            Outcome::NoAdaptation
        } else {
            Outcome::Adapted
        },
        adaptations,
        learner_calls: lp.learner_calls(),
        change_plans,
        grace_symptoms,
        first_mining_symptom,
        pre_injection_unsatisfied,
        agreement,
        provenance_verified,
        rejections: lp.rejections().len(),
    })
}
