use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use sacre_core::loopcore::{ChangePlan, Frame};
use sacre_core::reqmodel::{
    preprocess_perclos, BehaviorState, EnvironmentSnapshot, ReqModelError, RequirementSet, Truth,
};

use crate::actuator::{Actuator, ActuatorState};
use crate::config::VehicleConfig;
use crate::trace::{DriverAction, SensorTraceRow};
use crate::VehicleError;

/// Result of one vehicle tick.
#[derive(Debug, Clone)]
pub struct VehicleOutput {
    pub tick: u64,
    pub snapshot: EnvironmentSnapshot,
    pub behaviors: Vec<BehaviorState>,
    /// Context truth per requirement id.
    pub contexts: BTreeMap<String, Truth>,
    /// Variables whose sensor reported nothing this tick.
    pub absent: BTreeSet<String>,
}

#[derive(Debug)]
pub struct Vehicle {
    config: VehicleConfig,
    requirements: RequirementSet,
    actuators: BTreeMap<Actuator, ActuatorState>,
    eyes: VecDeque<f64>,
    notifications: u64,
}

impl Vehicle {
    pub fn new(config: VehicleConfig) -> Result<Self, VehicleError> {
        for r in config.requirements.iter() {
            if r.behavior_id.parse::<Actuator>().is_err() {
                return Err(VehicleError::Config {
                    key: format!("{}.behavior", r.id),
                    reason: format!("no actuator `{}`", r.behavior_id),
                });
            }
        }
        Ok(Self {
            requirements: config.requirements.clone(),
            actuators: Actuator::ALL.into_iter().map(|a| (a, ActuatorState::new(a))).collect(),
            eyes: VecDeque::with_capacity(config.perclos_window),
            notifications: 0,
            config,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, VehicleError> {
        Self::new(VehicleConfig::load(path)?)
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn config(&self) -> &VehicleConfig {
        &self.config
    }

    /// The requirement set in force, including enacted adaptations.
    pub fn requirements(&self) -> &RequirementSet {
        &self.requirements
    }

    pub fn actuator(&self, a: Actuator) -> &ActuatorState {
        &self.actuators[&a]
    }

    /// How many times a new requirement set has been announced.
    pub fn notifications(&self) -> u64 {
        self.notifications
    }

    pub fn tick(&mut self, row: &SensorTraceRow, actions: &[DriverAction]) -> Result<VehicleOutput, VehicleError> {
        let cfg = &self.config;
        let mut snapshot = EnvironmentSnapshot::new(row.tick);
        let mut absent = BTreeSet::new();

        match row.eyes_state {
            Some(e) => {
                if self.eyes.len() == cfg.perclos_window {
                    self.eyes.pop_front();
                }
                self.eyes.push_back(cfg.eyes_state.normalize(e));
                let window = self.eyes.make_contiguous();
                snapshot.insert_normalized("perclos", preprocess_perclos(window, cfg.perclos_window));
            }
            None => {
                absent.insert("perclos".to_string());
            }
        }
        for (name, raw, range) in [
            ("facePosition", row.face_position, cfg.face_position),
            ("hbpm", row.hbpm, cfg.hbpm),
            ("hosw", row.hosw, cfg.hosw),
        ] {
            match raw {
                Some(v) => snapshot.insert_normalized(name, range.normalize(v)),
                None => {
                    absent.insert(name.to_string());
                }
            }
        }

        let mut contexts = BTreeMap::new();
        let mut commanded: BTreeSet<Actuator> = BTreeSet::new();
        for r in self.requirements.iter() {
            let truth = r.operationalization.evaluate_all(&snapshot);
            if truth == Truth::True {
                commanded.insert(r.behavior_id.parse().expect("checked at construction"));
            }
            contexts.insert(r.id.clone(), truth);
        }
        for (a, state) in &mut self.actuators {
            state.command(commanded.contains(a));
        }
        for action in actions {
            self.actuators
                .get_mut(&action.actuator)
                .expect("all actuators exist")
                .apply(action.action)?;
        }

        let behaviors = self
            .requirements
            .iter()
            .map(|r| {
                let state = &self.actuators[&r.behavior_id.parse::<Actuator>().expect("checked at construction")];
                BehaviorState {
                    behavior_id: r.behavior_id.clone(),
                    active: state.effective_active(),
                    driver_disabled: state.is_disabled(),
                }
            })
            .collect();

        Ok(VehicleOutput {
            tick: row.tick,
            snapshot,
            behaviors,
            contexts,
            absent,
        })
    }

    /// What the adaptation loop's sensors receive.
    pub fn frame(&self, out: &VehicleOutput) -> Frame {
        Frame {
            source: self.config.id.clone(),
            tick: out.tick,
            snapshot: out.snapshot.clone(),
            requirements: self.requirements.clone(),
            behaviors: out.behaviors.clone(),
        }
    }

    /// Replaces one operationalization in memory. The configuration file
    /// is never written.
    pub fn apply_adaptation(&mut self, plan: &ChangePlan) -> Result<(), VehicleError> {
        if plan.target_managed_element != self.config.id {
            return Err(VehicleError::WrongTarget {
                target: plan.target_managed_element.clone(),
            });
        }
        self.requirements
            .replace_operationalization(&plan.requirement_id, plan.new_operationalization.clone())
            .map_err(|e| match e {
                ReqModelError::UnknownRequirement { id } => VehicleError::UnknownRequirement { id },
                other => other.into(),
            })?;
        self.notifications += 1;
        Ok(())
    }
}

/// A vehicle replaying a sensor trace and a driver action list.
#[derive(Debug)]
pub struct Simulation {
    pub vehicle: Vehicle,
    rows: Vec<SensorTraceRow>,
    actions: Vec<DriverAction>,
    next_row: usize,
    next_action: usize,
}

impl Simulation {
    pub fn new(vehicle: Vehicle, rows: Vec<SensorTraceRow>, mut actions: Vec<DriverAction>) -> Self {
        actions.sort_by_key(|a| a.tick);
        Self {
            vehicle,
            rows,
            actions,
            next_row: 0,
            next_action: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.next_row >= self.rows.len()
    }

    /// Runs the next tick; `None` once the trace is exhausted.
    pub fn step(&mut self) -> Option<Result<VehicleOutput, VehicleError>> {
        let row = self.rows.get(self.next_row)?;
        self.next_row += 1;
        let start = self.next_action;
        while self.actions.get(self.next_action).is_some_and(|a| a.tick <= row.tick) {
            self.next_action += 1;
        }
        Some(self.vehicle.tick(row, &self.actions[start..self.next_action]))
    }
}
