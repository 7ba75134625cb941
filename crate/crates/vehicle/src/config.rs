//! Vehicle policy: sensor normalization ranges, loop frequency and the
//! contextual requirements, stored as a flat properties file.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use sacre_core::reqmodel::{ContextualRequirement, Operationalization, RequirementSet, DEFAULT_PERCLOS_WINDOW};

use crate::VehicleError;

pub const CTX1: &str = "perclos>=0.15 AND hbpm<=0.60 AND hbpm>=0.56";
pub const CTX2: &str = "perclos>=0.21 AND facePosition=1 AND hbpm<=0.55 AND hbpm>=0.46";
pub const CTX3: &str = "perclos>0.30 AND facePosition=1 AND hbpm<=0.45 AND hosw<1";

/// Raw range of one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn normalize(self, raw: f64) -> f64 {
        (raw - self.min) / (self.max - self.min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleConfig {
    pub id: String,
    /// Ticks per simulated second.
    pub frequency: f64,
    pub perclos_window: usize,
    pub eyes_state: Range,
    pub face_position: Range,
    pub hbpm: Range,
    pub hosw: Range,
    pub requirements: RequirementSet,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        let req = |id: &str, label: &str, op: &str, behavior: &str| {
            ContextualRequirement::new(id, label, op.parse().expect("static operationalization"), behavior)
        };
        Self {
            id: "vehicle".into(),
            frequency: 20.0,
            perclos_window: DEFAULT_PERCLOS_WINDOW,
            eyes_state: Range { min: 0.0, max: 1.0 },
            face_position: Range { min: 0.0, max: 1.0 },
            hbpm: Range { min: 0.0, max: 120.0 },
            hosw: Range { min: 0.0, max: 2.0 },
            requirements: RequirementSet::new(vec![
                req("cr1", "Driver is drowsy", CTX1, "seat_vibration"),
                req("cr2", "Driver is dangerously drowsy", CTX2, "sound_light"),
                req("cr3", "Driver is sleeping", CTX3, "lane_keeping"),
            ])
            .expect("static requirements"),
        }
    }
}

const SENSORS: [&str; 4] = ["eyesState", "facePosition", "hbpm", "hosw"];

impl VehicleConfig {
    fn range(&self, sensor: &str) -> Range {
        match sensor {
            "eyesState" => self.eyes_state,
            "facePosition" => self.face_position,
            "hbpm" => self.hbpm,
            _ => self.hosw,
        }
    }

    fn range_mut(&mut self, sensor: &str) -> &mut Range {
        match sensor {
            "eyesState" => &mut self.eyes_state,
            "facePosition" => &mut self.face_position,
            "hbpm" => &mut self.hbpm,
            _ => &mut self.hosw,
        }
    }

    pub fn to_properties(&self) -> HashMap<String, String> {
        let mut m = HashMap::new();
        m.insert("vehicle.id".into(), self.id.clone());
        m.insert("vehicle.frequency".into(), self.frequency.to_string());
        m.insert("vehicle.perclosWindow".into(), self.perclos_window.to_string());
        for s in SENSORS {
            let r = self.range(s);
            m.insert(format!("vehicle.{s}.min"), r.min.to_string());
            m.insert(format!("vehicle.{s}.max"), r.max.to_string());
        }
        let ids: Vec<&str> = self.requirements.iter().map(|r| r.id.as_str()).collect();
        m.insert("vehicle.requirements".into(), ids.join(","));
        for r in self.requirements.iter() {
            m.insert(format!("{}.context", r.id), r.context_label.clone());
            m.insert(format!("{}.operationalization", r.id), r.operationalization.to_string());
            m.insert(format!("{}.behavior", r.id), r.behavior_id.clone());
        }
        m
    }

    pub fn from_properties(m: &HashMap<String, String>) -> Result<Self, VehicleError> {
        let get = |k: &str| {
            m.get(k).map(|v| v.trim()).ok_or_else(|| VehicleError::Config {
                key: k.to_string(),
                reason: "missing".into(),
            })
        };
        fn parse<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, VehicleError> {
            v.parse().map_err(|_| VehicleError::Config {
                key: k.to_string(),
                reason: format!("cannot parse `{v}`"),
            })
        }
        let mut cfg = Self {
            id: get("vehicle.id")?.to_string(),
            frequency: parse("vehicle.frequency", get("vehicle.frequency")?)?,
            perclos_window: parse("vehicle.perclosWindow", get("vehicle.perclosWindow")?)?,
            ..Self::default()
        };
        if cfg.perclos_window == 0 {
            return Err(VehicleError::Config {
                key: "vehicle.perclosWindow".into(),
                reason: "must be positive".into(),
            });
        }
        for s in SENSORS {
            let (kmin, kmax) = (format!("vehicle.{s}.min"), format!("vehicle.{s}.max"));
            let r = Range {
                min: parse(&kmin, get(&kmin)?)?,
                max: parse(&kmax, get(&kmax)?)?,
            };
            if !(r.min < r.max) {
                return Err(VehicleError::Config {
                    key: kmax,
                    reason: "max must exceed min".into(),
                });
            }
            *cfg.range_mut(s) = r;
        }
        let mut reqs = Vec::new();
        for id in get("vehicle.requirements")?.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let op_key = format!("{id}.operationalization");
            let op: Operationalization = get(&op_key)?.parse().map_err(|e| VehicleError::Config {
                key: op_key.clone(),
                reason: format!("{e}"),
            })?;
            reqs.push(ContextualRequirement::new(
                id,
                get(&format!("{id}.context"))?,
                op,
                get(&format!("{id}.behavior"))?,
            ));
        }
        cfg.requirements = RequirementSet::new(reqs)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, VehicleError> {
        let map = java_properties::read(File::open(path)?).map_err(|e| VehicleError::Config {
            key: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_properties(&map)
    }

    pub fn save(&self, path: &Path) -> Result<(), VehicleError> {
        java_properties::write(File::create(path)?, &self.to_properties()).map_err(|e| VehicleError::Config {
            key: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}
