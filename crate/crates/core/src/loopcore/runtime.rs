//! The running loop. Each call to [`Loop::iterate`] is one SACRE iteration:
//! sensors read the latest frame of every managed element, the Monitor
//! publishes records and symptoms on asynchronous queues, the Knowledge base
//! consumes its queue, and every queued symptom then runs through Analyze,
//! Plan and Execute.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, Sender};
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::reqmodel::UncertaintyCase;

use super::elements::{Analysis, Analyze, Clock, Execute, IdGen, Monitor, MonitorInput, Plan};
use super::kb::{KbMessage, KnowledgeBase};
use super::messages::{ActiveSetChange, ChangePlan, Frame, Rejection, RequestForChange, Symptom};
use super::policy::{PolicySet, Role, RolePolicy};
use super::provenance::ProvenanceLog;
use super::topology::{Health, Topology};
use super::LoopError;

/// Sensor and effector ends of one managed element.
#[derive(Debug)]
pub struct ManagedLink {
    pub id: String,
    pub frames: Receiver<Frame>,
    pub effector: Sender<ChangePlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AdaptationKind {
    Reoperationalized { rfc: RequestForChange, plan: ChangePlan },
    ActiveSet(ActiveSetChange),
}

/// One enacted change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adaptation {
    pub iteration: u64,
    pub case: UncertaintyCase,
    /// Enactment time minus emission time of the symptom that triggered it.
    pub response_time: Duration,
    pub kind: AdaptationKind,
}

impl Adaptation {
    pub fn requirement_id(&self) -> Option<&str> {
        match &self.kind {
            AdaptationKind::Reoperationalized { plan, .. } => Some(&plan.requirement_id),
            AdaptationKind::ActiveSet(_) => None,
        }
    }
}

/// What happened during one iteration.
#[derive(Debug, Clone, Default)]
pub struct IterationReport {
    pub iteration: u64,
    pub symptoms: Vec<Symptom>,
    pub adaptations: Vec<Adaptation>,
    pub rejections: Vec<Rejection>,
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub struct Loop {
    policies: PolicySet,
    topology: Topology,
    monitors: BTreeMap<String, Monitor>,
    analyzers: BTreeMap<String, Analyze>,
    planners: BTreeMap<String, Plan>,
    executors: BTreeMap<String, Execute>,
    kbs: BTreeMap<String, Arc<KnowledgeBase>>,
    links: Vec<ManagedLink>,
    latest: BTreeMap<String, Frame>,
    effectors: BTreeMap<String, Sender<ChangePlan>>,
    symptom_tx: Sender<Symptom>,
    symptom_rx: Receiver<Symptom>,
    kb_tx: Sender<KbMessage>,
    kb_rx: Receiver<KbMessage>,
    ids: IdGen,
    clock: Clock,
    iteration: u64,
    record_seq: u64,
    provenance: ProvenanceLog,
    adaptations: Vec<Adaptation>,
    rejections: Vec<Rejection>,
    /// Plans whose dispatch failed, kept for inspection.
    undelivered: Vec<ChangePlan>,
}

impl Loop {
    /// Builds and wires every element. The loop does nothing until
    /// [`Loop::start`].
    pub fn setup(policies: PolicySet, links: Vec<ManagedLink>) -> Result<Self, LoopError> {
        let managed: Vec<String> = links.iter().map(|l| l.id.clone()).collect();
        let topology = Topology::setup(&policies, &managed)?;

        let mut monitors = BTreeMap::new();
        let mut analyzers = BTreeMap::new();
        let mut planners = BTreeMap::new();
        let mut executors = BTreeMap::new();
        let mut kbs = BTreeMap::new();
        for h in topology.handles() {
            let Some(policy) = h.policy_ref.as_deref().and_then(|r| policies.policy(r)) else {
                continue;
            };
            match policy.clone() {
                RolePolicy::Monitor(p) => {
                    monitors.insert(h.id.clone(), Monitor::new(p));
                }
                RolePolicy::Analyze(p) => {
                    analyzers.insert(h.id.clone(), Analyze::new(p));
                }
                RolePolicy::Plan(p) => {
                    planners.insert(h.id.clone(), Plan::new(p));
                }
                RolePolicy::Execute(p) => {
                    executors.insert(h.id.clone(), Execute::new(p));
                }
                RolePolicy::KnowledgeBase(p) => {
                    kbs.insert(h.id.clone(), Arc::new(KnowledgeBase::new(p)));
                }
            }
        }

        let effectors = links.iter().map(|l| (l.id.clone(), l.effector.clone())).collect();
        let (symptom_tx, symptom_rx) = unbounded();
        let (kb_tx, kb_rx) = unbounded();
        Ok(Self {
            policies,
            topology,
            monitors,
            analyzers,
            planners,
            executors,
            kbs,
            links,
            latest: BTreeMap::new(),
            effectors,
            symptom_tx,
            symptom_rx,
            kb_tx,
            kb_rx,
            ids: IdGen::default(),
            clock: Clock::start(),
            iteration: 0,
            record_seq: 0,
            provenance: ProvenanceLog::default(),
            adaptations: Vec::new(),
            rejections: Vec::new(),
            undelivered: Vec::new(),
        })
    }

    pub fn start(&mut self) {
        self.topology.start();
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn policies(&self) -> &PolicySet {
        &self.policies
    }

    /// Time between iterations, from the Knowledge base frequency.
    pub fn period(&self) -> Duration {
        let ms = self.first_kb().map(|kb| kb.policy().period_ms()).unwrap_or(70);
        Duration::from_millis(ms)
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn provenance(&self) -> &ProvenanceLog {
        &self.provenance
    }

    pub fn adaptations(&self) -> &[Adaptation] {
        &self.adaptations
    }

    pub fn rejections(&self) -> &[Rejection] {
        &self.rejections
    }

    pub fn undelivered(&self) -> &[ChangePlan] {
        &self.undelivered
    }

    /// The Knowledge base currently serving reads.
    pub fn knowledge_base(&self) -> Option<Arc<KnowledgeBase>> {
        self.first_kb().cloned()
    }

    pub fn learner_calls(&self) -> u64 {
        self.analyzers.values().map(Analyze::learner_calls).sum()
    }

    pub fn verify_health(&self) -> Result<(), LoopError> {
        self.topology.verify_health()
    }

    pub fn set_health(&mut self, id: &str, state: Health) -> Result<(), LoopError> {
        self.topology.set_state(id, state)
    }

    /// Swaps one element's policy between iterations.
    pub fn reconfigure(&mut self, id: &str, policy: RolePolicy) -> Result<(), LoopError> {
        let handle = self
            .topology
            .handle(id)
            .ok_or_else(|| LoopError::UnknownElement { id: id.to_string() })?;
        if handle.role != policy.role() {
            return Err(LoopError::RoleMismatch {
                id: id.to_string(),
                expected: handle.role,
                actual: policy.role(),
            });
        }
        if let Some(reason) = policy.problem() {
            return Err(LoopError::Policy {
                key: id.to_string(),
                reason,
            });
        }
        match policy.clone() {
            RolePolicy::Monitor(p) => self.monitors.get_mut(id).map(|m| m.set_policy(p)),
            RolePolicy::Analyze(p) => self.analyzers.get_mut(id).map(|a| a.set_policy(p)),
            RolePolicy::Plan(p) => self.planners.get_mut(id).map(|x| x.set_policy(p)),
            RolePolicy::Execute(p) => self.executors.get_mut(id).map(|x| x.set_policy(p)),
            RolePolicy::KnowledgeBase(p) => self.kbs.get(id).map(|kb| kb.set_policy(p)),
        }
        .ok_or_else(|| LoopError::UnknownElement { id: id.to_string() })?;
        let reference = format!("{id}.override");
        self.policies.policies.insert(reference.clone(), policy);
        self.topology.set_policy_ref(id, reference)?;
        debug!(%id, "reconfigured; observers notified");
        Ok(())
    }

    fn first_kb(&self) -> Option<&Arc<KnowledgeBase>> {
        self.topology
            .first_healthy(Role::KnowledgeBase)
            .and_then(|id| self.kbs.get(id))
    }

    fn healthy<T>(&self, role: Role, map: &BTreeMap<String, T>) -> Option<String> {
        self.topology
            .handles()
            .iter()
            .find(|h| h.role == role && h.state == Health::Ok && map.contains_key(&h.id))
            .map(|h| h.id.clone())
    }

    pub fn iterate(&mut self) -> Result<IterationReport, LoopError> {
        if !self.topology.is_started() {
            return Err(LoopError::NotStarted);
        }
        self.iteration += 1;
        let mut report = IterationReport {
            iteration: self.iteration,
            ..IterationReport::default()
        };

        // Sensors: hold the most recent frame of each managed element.
        for link in &self.links {
            if let Some(frame) = link.frames.try_iter().last() {
                self.latest.insert(link.id.clone(), frame);
            }
        }

        // Monitor
        if let Some(monitor_id) = self.healthy(Role::Monitor, &self.monitors) {
            let kb = self.first_kb().cloned();
            let active: BTreeSet<String> = kb.as_ref().map(|kb| kb.active_variables()).unwrap_or_default();
            let thresholds = kb
                .as_ref()
                .map(|kb| kb.min_uncertainty_iterations())
                .unwrap_or_else(|| crate::loopcore::PolicySet::default_kb().min_uncertainty_iterations);
            let monitor = self.monitors.get_mut(&monitor_id).expect("healthy monitor exists");
            for frame in self.latest.values() {
                let out = monitor.tick(
                    MonitorInput {
                        iteration: self.iteration,
                        frame,
                        active: &active,
                        thresholds: &thresholds,
                    },
                    &mut self.ids,
                    &self.clock,
                );
                if let Some(set) = out.requirements {
                    let _ = self.kb_tx.send(KbMessage::Requirements {
                        source: frame.source.clone(),
                        set,
                    });
                }
                self.record_seq += 1;
                let mut record = out.record;
                record.tick = self.record_seq;
                let _ = self.kb_tx.send(KbMessage::Record(record));
                for s in out.symptoms {
                    report.symptoms.push(s.clone());
                    let _ = self.symptom_tx.send(s);
                }
            }
        }

        // Knowledge base
        for message in self.kb_rx.try_iter() {
            for (id, kb) in &self.kbs {
                if self.topology.handle(id).is_some_and(|h| h.state == Health::Ok) {
                    if let Err(e) = kb.handle(message.clone()) {
                        warn!(kb = %id, error = %e, "record rejected");
                        report.notes.push(e.to_string());
                    }
                }
            }
        }

        // Analyze, Plan, Execute over what is queued now.
        let queued = self.symptom_rx.len();
        let mut adapted: BTreeSet<String> = BTreeSet::new();
        let pending: Vec<Symptom> = self.symptom_rx.try_iter().take(queued).collect();
        for symptom in pending {
            if symptom.requirement_id.as_ref().is_some_and(|r| adapted.contains(r)) {
                continue;
            }
            self.provenance.record_symptom(&symptom);
            let Some(analyze_id) = self.healthy(Role::Analyze, &self.analyzers) else {
                let _ = self.symptom_tx.send(symptom);
                continue;
            };
            let kb = self.first_kb().cloned();
            let analyzer = self.analyzers.get_mut(&analyze_id).expect("healthy analyzer exists");
            let analysis = match analyzer.analyze(&symptom, kb.as_deref(), &mut self.ids) {
                Ok(a) => a,
                Err(e) => {
                    warn!(symptom = symptom.id, error = %e, "analysis failed");
                    report.notes.push(e.to_string());
                    continue;
                }
            };
            let (rfcs, active_set, note) = match analysis {
                Analysis::Requeue => {
                    let _ = self.symptom_tx.send(symptom);
                    continue;
                }
                Analysis::Done { rfcs, active_set, note } => (rfcs, active_set, note),
            };
            report.notes.extend(note);
            if let Some(mut change) = active_set {
                change.at = self.clock.now();
                let a = Adaptation {
                    iteration: self.iteration,
                    case: symptom.case.clone(),
                    response_time: self.response_time(&change.symptom_ids, change.at),
                    kind: AdaptationKind::ActiveSet(change),
                };
                report.adaptations.push(a);
            }
            for rfc in rfcs {
                if let Some(a) = self.plan_and_execute(rfc, &mut report)? {
                    if let Some(r) = a.requirement_id() {
                        adapted.insert(r.to_string());
                        for m in self.monitors.values_mut() {
                            m.clear_requirement(r);
                        }
                    }
                    report.adaptations.push(a);
                }
            }
        }
        if !adapted.is_empty() {
            // drop symptoms the Monitor queued for requirements just adapted
            let rest: Vec<Symptom> = self.symptom_rx.try_iter().collect();
            for s in rest {
                if !s.requirement_id.as_ref().is_some_and(|r| adapted.contains(r)) {
                    let _ = self.symptom_tx.send(s);
                }
            }
        }

        self.adaptations.extend(report.adaptations.iter().cloned());
        self.rejections.extend(report.rejections.iter().cloned());
        Ok(report)
    }

    fn plan_and_execute(
        &mut self,
        rfc: RequestForChange,
        report: &mut IterationReport,
    ) -> Result<Option<Adaptation>, LoopError> {
        self.provenance.record_rfc(&rfc);
        let Some(plan_id) = self.healthy(Role::Plan, &self.planners) else {
            report.notes.push(format!("rfc {} dropped: no healthy Plan", rfc.id));
            return Ok(None);
        };
        let mut plan = match self.planners[&plan_id].plan(&rfc, &mut self.ids) {
            Ok(p) => p,
            Err(rejection) => {
                report.rejections.push(rejection);
                return Ok(None);
            }
        };
        let Some(exec_id) = self.healthy(Role::Execute, &self.executors) else {
            report.notes.push(format!("plan {} held: no healthy Execute", plan.id));
            self.undelivered.push(plan);
            return Ok(None);
        };
        match self.executors[&exec_id].execute(&mut plan, &self.effectors, &self.clock) {
            Ok(at) => {
                self.provenance.record_plan(&plan);
                Ok(Some(Adaptation {
                    iteration: self.iteration,
                    case: rfc.case.clone(),
                    response_time: self.response_time(&rfc.symptom_ids, at),
                    kind: AdaptationKind::Reoperationalized { rfc, plan },
                }))
            }
            Err(e @ (LoopError::UnknownTarget { .. } | LoopError::Dispatch { .. })) => {
                warn!(plan = plan.id, error = %e, "dispatch failed");
                report.notes.push(e.to_string());
                self.undelivered.push(plan);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    /// Measured from the symptom that completed the evidence.
    fn response_time(&self, symptom_ids: &[u64], at: Duration) -> Duration {
        symptom_ids
            .last()
            .and_then(|id| self.provenance.symptom(*id))
            .map(|s| at.saturating_sub(s.emitted_at))
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopcore::PlanPolicy;
    use crate::reqmodel::{BehaviorState, ContextualRequirement, EnvironmentSnapshot, RequirementSet};

    fn requirements() -> RequirementSet {
        RequirementSet::new(vec![ContextualRequirement::new(
            "cr1",
            "Driver is drowsy",
            "perclos>=0.15 AND hbpm<=0.60 AND hbpm>=0.56".parse().unwrap(),
            "seat_vibration",
        )])
        .unwrap()
    }

    struct Vehicle {
        frames: Sender<Frame>,
        plans: Receiver<ChangePlan>,
        requirements: RequirementSet,
        tick: u64,
    }

    impl Vehicle {
        fn push(&mut self, values: &[(&str, f64)], vibrating: bool) {
            for plan in self.plans.try_iter() {
                self.requirements
                    .replace_operationalization(&plan.requirement_id, plan.new_operationalization)
                    .unwrap();
            }
            self.tick += 1;
            let frame = Frame {
                source: "vehicle".into(),
                tick: self.tick,
                snapshot: EnvironmentSnapshot::from_values(self.tick, values.iter().copied()),
                requirements: self.requirements.clone(),
                behaviors: vec![BehaviorState::new("seat_vibration", vibrating, false).unwrap()],
            };
            self.frames.send(frame).unwrap();
        }
    }

    fn rig(policies: PolicySet) -> (Loop, Vehicle) {
        let (ftx, frx) = unbounded();
        let (ptx, prx) = unbounded();
        let link = ManagedLink {
            id: "vehicle".into(),
            frames: frx,
            effector: ptx,
        };
        let lp = Loop::setup(policies, vec![link]).unwrap();
        let v = Vehicle {
            frames: ftx,
            plans: prx,
            requirements: requirements(),
            tick: 0,
        };
        (lp, v)
    }

    /// Alternating alert and drowsy ticks for the first 60, then a drowsy
    /// driver facing away who has disabled the seat vibration.
    fn drive(lp: &mut Loop, v: &mut Vehicle, ticks: u64) {
        for t in 0..ticks {
            let (values, vib): (Vec<(&str, f64)>, bool) = if t < 60 {
                let drowsy = t % 2 == 0;
                let hbpm = if drowsy { 0.58 } else { 0.70 };
                let perclos = if drowsy { 0.4 } else { 0.02 };
                (vec![("perclos", perclos), ("facePosition", 1.0), ("hbpm", hbpm), ("hosw", 1.0)], drowsy)
            } else {
                (vec![("perclos", 0.4), ("facePosition", 0.0), ("hbpm", 0.58), ("hosw", 1.0)], false)
            };
            v.push(&values, vib);
            lp.iterate().unwrap();
        }
    }

    #[test]
    fn not_started_is_an_error() {
        let (mut lp, _v) = rig(PolicySet::default());
        assert!(matches!(lp.iterate(), Err(LoopError::NotStarted)));
        assert_eq!(lp.period(), Duration::from_millis(70));
    }

    #[test]
    fn violation_is_mined_and_enacted() {
        let (mut lp, mut v) = rig(PolicySet::default());
        lp.start();
        drive(&mut lp, &mut v, 80);
        let first = lp.adaptations().first().expect("an adaptation");
        let AdaptationKind::Reoperationalized { rfc, plan } = &first.kind else {
            panic!("expected a re-operationalization");
        };
        assert_eq!(plan.requirement_id, "cr1");
        assert!(rfc.measures.unwrap().precision >= 0.95);
        assert!(plan.enacted_at.is_some());
        assert_eq!(lp.provenance().verify_all(), Ok(lp.adaptations().len()));
        assert!(lp.learner_calls() >= 1);
    }

    #[test]
    fn raised_plan_threshold_rejects() {
        let (mut lp, mut v) = rig(PolicySet::default());
        lp.start();
        let strict = RolePolicy::Plan(PlanPolicy {
            precision_min: 1.0,
            recall_min: 1.0,
            fmeasure_min: 1.0,
        });
        lp.reconfigure("plan-1", strict).unwrap();
        assert!(lp.reconfigure("nope", RolePolicy::Plan(PolicySet::default_plan())).is_err());
        assert!(matches!(
            lp.reconfigure("plan-1", RolePolicy::Execute(PolicySet::default_execute())),
            Err(LoopError::RoleMismatch { .. })
        ));
        drive(&mut lp, &mut v, 80);
        for r in lp.rejections() {
            assert!(r.value < r.minimum);
        }
    }

    #[test]
    fn no_analyzer_requeues() {
        let (mut lp, mut v) = rig(PolicySet::default());
        lp.start();
        lp.set_health("analyze-1", Health::NoOk).unwrap();
        assert!(lp.verify_health().is_err());
        drive(&mut lp, &mut v, 70);
        assert!(lp.adaptations().is_empty());
        lp.set_health("analyze-1", Health::Ok).unwrap();
        drive(&mut lp, &mut v, 1);
        assert!(!lp.adaptations().is_empty());
    }
}
