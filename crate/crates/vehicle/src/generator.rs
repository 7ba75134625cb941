//! Deterministic scenario traces.
//!
//! A trace is a sequence of segments. Each segment fixes the driver's state
//! (alert, one of the three drowsiness contexts, or the manual-activation
//! signature) and whether the eyes follow the drowsy blink pattern. Eye
//! regimes only change while the heart rate is in the alert band, so the
//! perclos window has settled by the time any context can hold.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sacre_core::reqmodel::RequirementSet;

use crate::actuator::{Action, Actuator};
use crate::config::VehicleConfig;
use crate::trace::{write_actions_file, write_sensor_file, DriverAction, SensorTraceRow};
use crate::VehicleError;

pub const VEHICLE_PERIOD_MS: u64 = 50;
pub const SACRE_PERIOD_MS: u64 = 70;

/// Iterations run after the injection point: debouncing, mining retries
/// and the post-adaptation grace period.
pub const TAIL_ITERATIONS: u64 = 150;

/// Length of the episode that carries the injected uncertainty.
const INJECTED_TICKS: u64 = 140;

const OPEN_TICKS: u64 = 100;
const SETTLE_TICKS: u64 = 60;
const EPISODE_TICKS: u64 = 80;
const COOLDOWN_TICKS: u64 = 20;
const CYCLE_TICKS: u64 = OPEN_TICKS + SETTLE_TICKS + EPISODE_TICKS + COOLDOWN_TICKS;

/// The newest vehicle tick visible at a SACRE iteration.
pub fn vehicle_tick_at(iteration: u64) -> u64 {
    iteration * SACRE_PERIOD_MS / VEHICLE_PERIOD_MS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    Us1,
    Us2,
    Us3,
    Us4a,
    Us4b,
    Us5,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Us1,
        ScenarioKind::Us2,
        ScenarioKind::Us3,
        ScenarioKind::Us4a,
        ScenarioKind::Us4b,
        ScenarioKind::Us5,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ScenarioKind::Us1 => "us1",
            ScenarioKind::Us2 => "us2",
            ScenarioKind::Us3 => "us3",
            ScenarioKind::Us4a => "us4a",
            ScenarioKind::Us4b => "us4b",
            ScenarioKind::Us5 => "us5",
        }
    }

    /// SACRE iterations before the uncertainty appears, at full scale.
    pub fn full_scale_iterations(self) -> u64 {
        match self {
            ScenarioKind::Us1 => 1_000,
            ScenarioKind::Us2 => 15_000,
            ScenarioKind::Us3 => 30_000,
            ScenarioKind::Us4a => 45_000,
            ScenarioKind::Us4b => 60_000,
            ScenarioKind::Us5 => 75_000,
        }
    }

    /// Fewest pre-injection iterations the episode layout fits in.
    pub fn minimum_iterations(self) -> u64 {
        match self {
            ScenarioKind::Us5 => 60,
            _ => 15,
        }
    }

    /// Whether the scenario is resolved by rule learning.
    pub fn mines(self) -> bool {
        !matches!(self, ScenarioKind::Us4a | ScenarioKind::Us4b)
    }

    /// Requirement the scenario targets, for the mined ones.
    pub fn requirement(self) -> Option<&'static str> {
        match self {
            ScenarioKind::Us1 => Some("cr1"),
            ScenarioKind::Us2 => Some("cr2"),
            ScenarioKind::Us3 | ScenarioKind::Us5 => Some("cr3"),
            _ => None,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScenarioKind {
    type Err = VehicleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| VehicleError::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub scale: f64,
    /// First SACRE iteration that sees the injected uncertainty.
    pub injection_iteration: u64,
    pub total_iterations: u64,
    pub injection_tick: u64,
    pub total_ticks: u64,
    /// Requirements the vehicle starts with.
    pub requirements: RequirementSet,
    /// Variables the adaptation loop starts without.
    pub inactive_variables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub spec: ScenarioSpec,
    pub trace: Vec<SensorTraceRow>,
    pub actions: Vec<DriverAction>,
}

impl GeneratedScenario {
    pub fn config(&self) -> VehicleConfig {
        VehicleConfig {
            requirements: self.spec.requirements.clone(),
            ..VehicleConfig::default()
        }
    }

    /// Writes `sensors.csv`, `actions.csv` and `vehicle.properties`.
    pub fn write(&self, dir: &Path) -> Result<ScenarioFiles, VehicleError> {
        fs::create_dir_all(dir)?;
        let files = ScenarioFiles::in_dir(dir);
        write_sensor_file(&self.trace, &files.sensors)?;
        write_actions_file(&self.actions, &files.actions)?;
        self.config().save(&files.config)?;
        Ok(files)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioFiles {
    pub sensors: PathBuf,
    pub actions: PathBuf,
    pub config: PathBuf,
}

impl ScenarioFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            sensors: dir.join("sensors.csv"),
            actions: dir.join("actions.csv"),
            config: dir.join("vehicle.properties"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Driver {
    Alert,
    Ctx1,
    Ctx2,
    Ctx3,
    /// Awake, looking away, one hand on the wheel, elevated heart rate.
    Signature,
}

impl Driver {
    /// (heart rate centre in bpm, face position, hands on wheel)
    fn profile(self) -> (i64, f64, f64) {
        match self {
            Driver::Alert => (80, 1.0, 2.0),
            Driver::Ctx1 => (70, 1.0, 2.0),
            Driver::Ctx2 => (61, 1.0, 1.0),
            Driver::Ctx3 => (48, 1.0, 0.0),
            Driver::Signature => (86, 0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    driver: Driver,
    drowsy_eyes: bool,
    len: u64,
}

fn push(segments: &mut Vec<Segment>, driver: Driver, drowsy_eyes: bool, len: u64) {
    if len > 0 {
        segments.push(Segment { driver, drowsy_eyes, len });
    }
}

/// The state the scenario's own episodes use before the injection.
fn home_state(kind: ScenarioKind) -> Driver {
    match kind {
        ScenarioKind::Us1 => Driver::Ctx1,
        ScenarioKind::Us2 => Driver::Ctx2,
        _ => Driver::Ctx3,
    }
}

fn layout(kind: ScenarioKind, injection_tick: u64, total_ticks: u64) -> Vec<Segment> {
    let k = injection_tick;
    let mut segs = Vec::new();
    let rotation: &[Driver] = match kind {
        // no sleeping episodes: the manual activation is cr3's only evidence
        ScenarioKind::Us5 => &[Driver::Ctx1, Driver::Ctx2],
        _ => &[Driver::Ctx1, Driver::Ctx2, Driver::Ctx3],
    };
    let final_min = match kind {
        ScenarioKind::Us5 => SETTLE_TICKS + 20,
        _ => 20,
    };

    let lead = COOLDOWN_TICKS.min(k / 4);
    push(&mut segs, Driver::Alert, true, lead);
    let mut pos = lead;
    let mut i = 0;
    while k - pos >= CYCLE_TICKS + final_min {
        push(&mut segs, Driver::Alert, false, OPEN_TICKS);
        push(&mut segs, Driver::Alert, true, SETTLE_TICKS);
        push(&mut segs, rotation[i % rotation.len()], true, EPISODE_TICKS);
        push(&mut segs, Driver::Alert, true, COOLDOWN_TICKS);
        pos += CYCLE_TICKS;
        i += 1;
    }
    match kind {
        ScenarioKind::Us1 | ScenarioKind::Us2 | ScenarioKind::Us3 => {
            push(&mut segs, home_state(kind), true, k - pos);
            push(&mut segs, home_state(kind), true, INJECTED_TICKS);
            push(&mut segs, Driver::Alert, true, COOLDOWN_TICKS);
            let used = k + INJECTED_TICKS + COOLDOWN_TICKS;
            push(&mut segs, Driver::Alert, false, total_ticks.saturating_sub(used));
        }
        ScenarioKind::Us4a | ScenarioKind::Us4b => {
            push(&mut segs, Driver::Alert, false, total_ticks - pos);
        }
        ScenarioKind::Us5 => {
            push(&mut segs, Driver::Alert, false, k - pos);
            push(&mut segs, Driver::Signature, false, INJECTED_TICKS);
            push(&mut segs, Driver::Alert, false, total_ticks.saturating_sub(k + INJECTED_TICKS));
        }
    }
    segs
}

/// Builds the trace and driver actions for one scenario. `scale` shrinks
/// the full-scale injection point; a fixed tail follows it.
pub fn generate(kind: ScenarioKind, seed: u64, scale: f64) -> Result<GeneratedScenario, VehicleError> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(VehicleError::Config {
            key: "scale".into(),
            reason: format!("{scale} is outside (0, 1]"),
        });
    }
    let injection_iteration = (scale * kind.full_scale_iterations() as f64).round() as u64;
    if injection_iteration < kind.minimum_iterations() {
        return Err(VehicleError::BudgetTooSmall {
            scenario: kind,
            iterations: injection_iteration,
            minimum: kind.minimum_iterations(),
        });
    }
    let total_iterations = injection_iteration + TAIL_ITERATIONS;
    let injection_tick = vehicle_tick_at(injection_iteration);
    let total_ticks = vehicle_tick_at(total_iterations) + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::with_capacity(total_ticks as usize);
    let mut t = 0u64;
    for seg in layout(kind, injection_tick, total_ticks) {
        for _ in 0..seg.len {
            let (bpm, mut face, mut hosw) = seg.driver.profile();
            let closed = seg.drowsy_eyes && t % 5 < 2;
            let eyes: f64 = if closed { 0.05 } else { 0.85 } + rng.random_range(-0.02..=0.02);
            // brief glances away while alert and attentive
            if seg.driver == Driver::Alert && !seg.drowsy_eyes && t % 100 >= 90 {
                face = 0.0;
            }
            let hbpm = (bpm + rng.random_range(-2..=2)) as f64;
            let injected = t >= injection_tick && t < injection_tick + INJECTED_TICKS;
            match kind {
                ScenarioKind::Us1 if injected => face = 0.0,
                ScenarioKind::Us2 if injected => hosw = 2.0,
                ScenarioKind::Us3 if injected => hosw = 1.0,
                ScenarioKind::Us4a if t >= injection_tick => face = 1.4,
                ScenarioKind::Us4b if t < injection_tick => face = 1.4,
                _ => {}
            }
            trace.push(SensorTraceRow {
                tick: t,
                eyes_state: Some((eyes * 1000.0).round() / 1000.0),
                face_position: Some(face),
                hbpm: Some(hbpm),
                hosw: Some(hosw),
            });
            t += 1;
        }
    }
    debug_assert_eq!(t, total_ticks);

    let end = injection_tick + INJECTED_TICKS;
    let action = |tick, actuator, action| DriverAction::new(tick, actuator, action).expect("valid action");
    let actions = match kind {
        ScenarioKind::Us1 => vec![
            action(injection_tick, Actuator::SeatVibration, Action::Disable),
            action(end, Actuator::SeatVibration, Action::Enable),
        ],
        ScenarioKind::Us2 => vec![
            action(injection_tick, Actuator::SoundLight, Action::Disable),
            action(end, Actuator::SoundLight, Action::Enable),
        ],
        ScenarioKind::Us3 => vec![
            action(injection_tick, Actuator::LaneKeeping, Action::Disable),
            action(end, Actuator::LaneKeeping, Action::Enable),
        ],
        ScenarioKind::Us5 => vec![
            action(injection_tick, Actuator::LaneKeeping, Action::TurnOn),
            action(end, Actuator::LaneKeeping, Action::TurnOff),
        ],
        ScenarioKind::Us4a | ScenarioKind::Us4b => Vec::new(),
    };

    let mut requirements = VehicleConfig::default().requirements;
    let mut inactive_variables = Vec::new();
    if kind == ScenarioKind::Us4b {
        // the state us4a leaves behind
        for id in ["cr2", "cr3"] {
            let stripped = requirements.get(id).expect("default requirement").operationalization.strip_variable("facePosition");
            requirements.replace_operationalization(id, stripped)?;
        }
        inactive_variables.push("facePosition".to_string());
    }

    Ok(GeneratedScenario {
        spec: ScenarioSpec {
            kind,
            seed,
            scale,
            injection_iteration,
            total_iterations,
            injection_tick,
            total_ticks,
            requirements,
            inactive_variables,
        },
        trace,
        actions,
    })
}
