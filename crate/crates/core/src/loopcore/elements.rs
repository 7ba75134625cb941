//! Monitor, Analyze, Plan and Execute. Each is a plain state machine driven
//! by messages; the wiring and scheduling live in [`super::runtime`].

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use crossbeam_channel::Sender;
use tracing::{debug, info};

use crate::mining::{cross_validate, learn_ruleset, ruleset_to_operationalization};
use crate::reqmodel::{
    assess_satisfaction, detect_sensor_anomaly, CaseKind, EnvironmentSnapshot, RequirementSet, SensorStatus,
    UncertaintyCase, Verdict,
};

use super::kb::{KbRecord, KnowledgeBase};
use super::messages::{ActiveSetChange, ChangePlan, Evidence, Frame, Rejection, RequestForChange, Symptom};
use super::policy::{AnalyzePolicy, CaseThresholds, ExecutePolicy, MonitorPolicy, PlanPolicy};
use super::LoopError;

/// Monotonic time since the loop started.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    epoch: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Self { epoch: Instant::now() }
    }

    pub fn now(&self) -> Duration {
        self.epoch.elapsed()
    }
}

/// Message ids, unique within one loop.
#[derive(Debug, Default)]
pub struct IdGen(u64);

impl IdGen {
    pub fn next_id(&mut self) -> u64 {
        self.0 += 1;
        self.0
    }
}

pub struct MonitorInput<'a> {
    pub iteration: u64,
    pub frame: &'a Frame,
    pub active: &'a BTreeSet<String>,
    pub thresholds: &'a CaseThresholds,
}

#[derive(Debug)]
pub struct MonitorOutput {
    pub record: KbRecord,
    /// The frame's requirement set, when it differs from the last one seen.
    pub requirements: Option<RequirementSet>,
    pub symptoms: Vec<Symptom>,
}

#[derive(Debug)]
pub struct Monitor {
    policy: MonitorPolicy,
    statuses: BTreeMap<String, SensorStatus>,
    /// Consecutive qualifying ticks per (subject, case).
    streaks: BTreeMap<(String, CaseKind), u32>,
    last_requirements: Option<RequirementSet>,
}

impl Monitor {
    pub fn new(policy: MonitorPolicy) -> Self {
        Self {
            policy,
            statuses: BTreeMap::new(),
            streaks: BTreeMap::new(),
            last_requirements: None,
        }
    }

    pub fn set_policy(&mut self, policy: MonitorPolicy) {
        self.policy = policy;
    }

    pub fn status(&self, variable: &str) -> SensorStatus {
        self.statuses.get(variable).copied().unwrap_or_default()
    }

    /// Forgets dissatisfaction streaks of one requirement.
    pub fn clear_requirement(&mut self, requirement_id: &str) {
        self.streaks.retain(|(subject, _), _| subject != requirement_id);
    }

    /// Counts one qualifying tick; true when the streak reaches the
    /// threshold, which restarts it.
    fn qualify(&mut self, subject: &str, kind: CaseKind, threshold: u32) -> bool {
        self.streaks.retain(|(s, k), _| s != subject || *k == kind);
        let n = self.streaks.entry((subject.to_string(), kind)).or_insert(0);
        *n += 1;
        if *n >= threshold.max(1) {
            *n = 0;
            true
        } else {
            false
        }
    }

    fn reset(&mut self, subject: &str) {
        self.streaks.retain(|(s, _), _| s != subject);
    }

    pub fn tick(&mut self, input: MonitorInput<'_>, ids: &mut IdGen, clock: &Clock) -> MonitorOutput {
        let frame = input.frame;
        let mut snapshot = EnvironmentSnapshot::new(frame.tick);
        for spec in &self.policy.variables {
            if let Some(v) = frame.snapshot.get_unclamped(&spec.name) {
                snapshot.insert_raw(spec, v);
            }
        }

        let mut symptoms = Vec::new();
        let mut emit = |ids: &mut IdGen, requirement_id: Option<String>, case: UncertaintyCase, evidence: Evidence| {
            symptoms.push(Symptom {
                id: ids.next_id(),
                requirement_id,
                case,
                tick: input.iteration,
                source: frame.source.clone(),
                emitted_at: clock.now(),
                snapshot: snapshot.clone(),
                evidence,
            });
        };

        let mut faulty = BTreeSet::new();
        let specs = self.policy.variables.clone();
        for spec in &specs {
            let prior = self.status(&spec.name);
            let (case, status) = detect_sensor_anomaly(spec, &snapshot, prior);
            self.statuses.insert(spec.name.clone(), status);
            if status != SensorStatus::Healthy {
                faulty.insert(spec.name.clone());
            }
            let active = input.active.contains(&spec.name);
            let case = match case {
                Some(c @ (UncertaintyCase::SensorLost { .. } | UncertaintyCase::SensorDecalibrated { .. })) if active => {
                    Some(c)
                }
                _ if status == SensorStatus::Healthy && !active => Some(UncertaintyCase::SensorUp {
                    variable: spec.name.clone(),
                }),
                _ => None,
            };
            match case {
                Some(case) => {
                    if self.qualify(&spec.name, case.kind(), input.thresholds.get(case.kind())) {
                        let evidence = Evidence::Sensor {
                            variable: spec.name.clone(),
                            reading: snapshot.get_unclamped(&spec.name),
                            valid_min: spec.valid_min,
                            valid_max: spec.valid_max,
                            was_active: active,
                        };
                        emit(ids, None, case, evidence);
                    }
                }
                None => self.reset(&spec.name),
            }
        }

        let mut behaviors = BTreeMap::new();
        for req in frame.requirements.iter() {
            let Some(beh) = frame.behavior(&req.behavior_id) else {
                continue;
            };
            behaviors.insert(req.id.clone(), beh.active);
            let truth = req
                .operationalization
                .evaluate(&snapshot, input.active.iter().map(String::as_str));
            match assess_satisfaction(req, truth, beh) {
                Ok(Verdict::Uncertain(case)) => {
                    if self.qualify(&req.id, case.kind(), input.thresholds.get(case.kind())) {
                        let evidence = Evidence::Requirement {
                            operationalization: req.operationalization.clone(),
                            behavior_active: beh.active,
                        };
                        emit(ids, Some(req.id.clone()), case, evidence);
                    }
                }
                _ => self.reset(&req.id),
            }
        }

        let requirements = (self.last_requirements.as_ref() != Some(&frame.requirements)).then(|| {
            self.last_requirements = Some(frame.requirements.clone());
            frame.requirements.clone()
        });

        MonitorOutput {
            record: KbRecord {
                tick: input.iteration,
                values: snapshot.values().clone(),
                faulty,
                behaviors,
            },
            requirements,
            symptoms,
        }
    }
}

/// What Analyze decided for one symptom.
#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    /// The Knowledge base was unreachable; try the symptom again later.
    Requeue,
    Done {
        rfcs: Vec<RequestForChange>,
        active_set: Option<ActiveSetChange>,
        note: Option<String>,
    },
}

impl Analysis {
    fn note(text: impl Into<String>) -> Self {
        Analysis::Done {
            rfcs: Vec::new(),
            active_set: None,
            note: Some(text.into()),
        }
    }

    fn rfc(rfc: RequestForChange) -> Self {
        Analysis::Done {
            rfcs: vec![rfc],
            active_set: None,
            note: None,
        }
    }
}

#[derive(Debug)]
pub struct Analyze {
    policy: AnalyzePolicy,
    /// Symptom ids seen per (case, subject) since the last action.
    repeats: BTreeMap<(CaseKind, String), Vec<u64>>,
    learner_calls: u64,
}

impl Analyze {
    pub fn new(policy: AnalyzePolicy) -> Self {
        Self {
            policy,
            repeats: BTreeMap::new(),
            learner_calls: 0,
        }
    }

    pub fn set_policy(&mut self, policy: AnalyzePolicy) {
        self.policy = policy;
    }

    /// How many times the rule learner has run.
    pub fn learner_calls(&self) -> u64 {
        self.learner_calls
    }

    pub fn analyze(
        &mut self,
        symptom: &Symptom,
        kb: Option<&KnowledgeBase>,
        ids: &mut IdGen,
    ) -> Result<Analysis, LoopError> {
        let Some(kb) = kb else {
            return Ok(Analysis::Requeue);
        };
        let kind = symptom.case.kind();
        let subject = symptom
            .case
            .variable()
            .or(symptom.requirement_id.as_deref())
            .unwrap_or_default()
            .to_string();

        // a sensor flipping between faulty and recovered restarts its count
        if let Some(variable) = symptom.case.variable() {
            self.repeats
                .retain(|(k, s), _| s != variable || *k == kind || !k.is_sensor_case());
        }
        let seen = self.repeats.entry((kind, subject.clone())).or_default();
        seen.push(symptom.id);
        if (seen.len() as u32) < self.policy.min_analysis_iterations.get(kind).max(1) {
            return Ok(Analysis::Done {
                rfcs: Vec::new(),
                active_set: None,
                note: None,
            });
        }
        let symptom_ids = std::mem::take(seen);

        match &symptom.case {
            UncertaintyCase::SensorLost { variable } | UncertaintyCase::SensorDecalibrated { variable } => {
                if !kb.set_active(variable, false) {
                    return Ok(Analysis::note(format!("{variable} already inactive")));
                }
                let requirements = kb.requirements(&symptom.source).unwrap_or_default();
                let rfcs = requirements
                    .iter()
                    .filter(|r| r.operationalization.references(variable))
                    .map(|r| RequestForChange {
                        id: ids.next_id(),
                        requirement_id: r.id.clone(),
                        candidate: r.operationalization.strip_variable(variable),
                        measures: None,
                        case: symptom.case.clone(),
                        symptom_ids: symptom_ids.clone(),
                        target: symptom.source.clone(),
                        dataset_size: 0,
                    })
                    .collect();
                info!(%variable, "removed from the active set");
                Ok(Analysis::Done {
                    rfcs,
                    active_set: Some(ActiveSetChange {
                        variable: variable.clone(),
                        added: false,
                        symptom_ids,
                        at: Duration::ZERO,
                    }),
                    note: None,
                })
            }
            UncertaintyCase::SensorUp { variable } => {
                if !kb.set_active(variable, true) {
                    return Ok(Analysis::note(format!("{variable} already active")));
                }
                info!(%variable, "added to the active set");
                Ok(Analysis::Done {
                    rfcs: Vec::new(),
                    active_set: Some(ActiveSetChange {
                        variable: variable.clone(),
                        added: true,
                        symptom_ids,
                        at: Duration::ZERO,
                    }),
                    note: None,
                })
            }
            UncertaintyCase::NoOperationalization
            | UncertaintyCase::Violation { .. }
            | UncertaintyCase::PotentiallyWrongContext { .. } => self.mine(symptom, kb, ids, symptom_ids),
        }
    }

    fn mine(
        &mut self,
        symptom: &Symptom,
        kb: &KnowledgeBase,
        ids: &mut IdGen,
        symptom_ids: Vec<u64>,
    ) -> Result<Analysis, LoopError> {
        let Some(requirement_id) = symptom.requirement_id.clone() else {
            return Ok(Analysis::note("mined case without a requirement"));
        };
        let Evidence::Requirement { behavior_active, .. } = symptom.evidence else {
            return Ok(Analysis::note("mined case without requirement evidence"));
        };
        let ds = kb.fetch(&requirement_id, &self.policy.variables)?;
        kb.persist(&ds)?;
        if ds.len() < self.policy.folds {
            return Ok(Analysis::note(format!("{} records are too few to mine", ds.len())));
        }

        self.learner_calls += 1;
        let rules = learn_ruleset(&ds, self.policy.seed);
        if rules.degenerate {
            return Ok(Analysis::note("history holds a single class"));
        }
        let measures = cross_validate(&ds, self.policy.folds, self.policy.seed)?;
        let candidate = ruleset_to_operationalization(&rules)?.rename_variables(&kb.policy().column_map());

        // the candidate must explain the very observation that raised the symptom
        let explains = candidate.holds_on(|v| symptom.snapshot.get(v)) == Some(behavior_active);
        if candidate.is_empty() || !explains {
            debug!(%requirement_id, %candidate, "candidate does not explain the symptom");
            return Ok(Analysis::note(format!("candidate `{candidate}` does not explain the symptom")));
        }
        debug!(%requirement_id, %candidate, ?measures, records = ds.len(), "mined candidate");
        Ok(Analysis::rfc(RequestForChange {
            id: ids.next_id(),
            requirement_id,
            candidate,
            measures: Some(measures),
            case: symptom.case.clone(),
            symptom_ids,
            target: symptom.source.clone(),
            dataset_size: ds.len(),
        }))
    }
}

#[derive(Debug)]
pub struct Plan {
    policy: PlanPolicy,
}

impl Plan {
    pub fn new(policy: PlanPolicy) -> Self {
        Self { policy }
    }

    pub fn set_policy(&mut self, policy: PlanPolicy) {
        self.policy = policy;
    }

    pub fn plan(&self, rfc: &RequestForChange, ids: &mut IdGen) -> Result<ChangePlan, Rejection> {
        let reject = |measure: &str, value: f64, minimum: f64| Rejection {
            rfc_id: rfc.id,
            measure: measure.to_string(),
            value,
            minimum,
        };
        match rfc.measures {
            Some(m) => {
                for (name, value, minimum) in [
                    ("precision", m.precision, self.policy.precision_min),
                    ("recall", m.recall, self.policy.recall_min),
                    ("fMeasure", m.f_measure, self.policy.fmeasure_min),
                ] {
                    if value < minimum {
                        info!(rfc = rfc.id, name, value, minimum, "change rejected");
                        return Err(reject(name, value, minimum));
                    }
                }
            }
            None if rfc.case.kind().requires_mining() => return Err(reject("measures", f64::NAN, 0.0)),
            None => {}
        }
        Ok(ChangePlan {
            id: ids.next_id(),
            rfc_id: rfc.id,
            requirement_id: rfc.requirement_id.clone(),
            new_operationalization: rfc.candidate.clone(),
            target_managed_element: rfc.target.clone(),
            enacted_at: None,
        })
    }
}

#[derive(Debug)]
pub struct Execute {
    policy: ExecutePolicy,
}

impl Execute {
    pub fn new(policy: ExecutePolicy) -> Self {
        Self { policy }
    }

    pub fn set_policy(&mut self, policy: ExecutePolicy) {
        self.policy = policy;
    }

    /// Sends the plan through the target's effector and stamps it.
    pub fn execute(
        &self,
        plan: &mut ChangePlan,
        effectors: &BTreeMap<String, Sender<ChangePlan>>,
        clock: &Clock,
    ) -> Result<Duration, LoopError> {
        if plan.enacted_at.is_some() {
            return Err(LoopError::AlreadyEnacted { plan_id: plan.id });
        }
        let target = &plan.target_managed_element;
        let effector = effectors
            .get(target)
            .filter(|_| self.policy.managed_elements.contains(target))
            .ok_or_else(|| LoopError::UnknownTarget { target: target.clone() })?;
        let at = clock.now();
        plan.enacted_at = Some(at);
        if effector.send(plan.clone()).is_err() {
            plan.enacted_at = None;
            return Err(LoopError::Dispatch {
                target: target.clone(),
                reason: "effector disconnected".into(),
            });
        }
        info!(plan = plan.id, requirement = %plan.requirement_id, op = %plan.new_operationalization, "enacted");
        Ok(at)
    }
}
