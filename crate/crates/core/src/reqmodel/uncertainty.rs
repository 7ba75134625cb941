//! The uncertainty taxonomy and the detectors that map observations to it.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::operationalization::Truth;
use super::requirement::{BehaviorState, ContextualRequirement};
use super::snapshot::EnvironmentSnapshot;
use super::variable::VariableSpec;
use super::ReqModelError;

/// Runtime conditions under which a contextual requirement is dissatisfied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum UncertaintyCase {
    /// Case 1
    NoOperationalization,
    /// Case 2a
    SensorLost { variable: String },
    /// Case 2b
    SensorDecalibrated { variable: String },
    /// Case 2c
    SensorUp { variable: String },
    /// Case 3: context holds, behavior inactive.
    Violation { requirement_id: String },
    /// Case 4: context does not hold, behavior active.
    PotentiallyWrongContext { requirement_id: String },
}

/// Payload-free discriminant, used for policy keys and counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Case1,
    Case2a,
    Case2b,
    Case2c,
    Case3,
    Case4,
}

impl CaseKind {
    pub const ALL: [CaseKind; 6] = [
        CaseKind::Case1,
        CaseKind::Case2a,
        CaseKind::Case2b,
        CaseKind::Case2c,
        CaseKind::Case3,
        CaseKind::Case4,
    ];

    pub fn key(self) -> &'static str {
        match self {
            CaseKind::Case1 => "case1",
            CaseKind::Case2a => "case2a",
            CaseKind::Case2b => "case2b",
            CaseKind::Case2c => "case2c",
            CaseKind::Case3 => "case3",
            CaseKind::Case4 => "case4",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.key() == key)
    }

    /// Cases resolved by learning a new operationalization from history.
    pub fn requires_mining(self) -> bool {
        matches!(self, CaseKind::Case1 | CaseKind::Case3 | CaseKind::Case4)
    }

    pub fn is_sensor_case(self) -> bool {
        matches!(self, CaseKind::Case2a | CaseKind::Case2b | CaseKind::Case2c)
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl UncertaintyCase {
    pub fn kind(&self) -> CaseKind {
        match self {
            UncertaintyCase::NoOperationalization => CaseKind::Case1,
            UncertaintyCase::SensorLost { .. } => CaseKind::Case2a,
            UncertaintyCase::SensorDecalibrated { .. } => CaseKind::Case2b,
            UncertaintyCase::SensorUp { .. } => CaseKind::Case2c,
            UncertaintyCase::Violation { .. } => CaseKind::Case3,
            UncertaintyCase::PotentiallyWrongContext { .. } => CaseKind::Case4,
        }
    }

    pub fn variable(&self) -> Option<&str> {
        match self {
            UncertaintyCase::SensorLost { variable }
            | UncertaintyCase::SensorDecalibrated { variable }
            | UncertaintyCase::SensorUp { variable } => Some(variable),
            _ => None,
        }
    }

    pub fn requirement_id(&self) -> Option<&str> {
        match self {
            UncertaintyCase::Violation { requirement_id }
            | UncertaintyCase::PotentiallyWrongContext { requirement_id } => Some(requirement_id),
            _ => None,
        }
    }
}

impl fmt::Display for UncertaintyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variable().or(self.requirement_id()) {
            Some(subject) => write!(f, "{}({subject})", self.kind()),
            None => write!(f, "{}", self.kind()),
        }
    }
}

/// Requirement-level verdict for one tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Uncertain(UncertaintyCase),
    /// Context unknown for a non-empty operationalization. Sensor-level
    /// detection reports the cause, so nothing is emitted here.
    Indeterminate,
}

pub fn assess_satisfaction(
    req: &ContextualRequirement,
    ctx_value: Truth,
    beh: &BehaviorState,
) -> Result<Verdict, ReqModelError> {
    if beh.behavior_id != req.behavior_id {
        return Err(ReqModelError::BehaviorMismatch {
            requirement: req.id.clone(),
            expected: req.behavior_id.clone(),
            found: beh.behavior_id.clone(),
        });
    }
    let verdict = match (ctx_value, beh.active) {
        (Truth::Unknown, _) if req.operationalization.is_empty() => {
            Verdict::Uncertain(UncertaintyCase::NoOperationalization)
        }
        (Truth::Unknown, _) => Verdict::Indeterminate,
        (Truth::True, false) => Verdict::Uncertain(UncertaintyCase::Violation {
            requirement_id: req.id.clone(),
        }),
        (Truth::False, true) => Verdict::Uncertain(UncertaintyCase::PotentiallyWrongContext {
            requirement_id: req.id.clone(),
        }),
        (Truth::True, true) | (Truth::False, false) => Verdict::Satisfied,
    };
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorStatus {
    #[default]
    Healthy,
    Lost,
    Decalibrated,
}

/// Advances one variable's status machine and reports any sensor-level case.
pub fn detect_sensor_anomaly(
    spec: &VariableSpec,
    snapshot: &EnvironmentSnapshot,
    prior_status: SensorStatus,
) -> (Option<UncertaintyCase>, SensorStatus) {
    let variable = spec.name.clone();
    match snapshot.get_unclamped(&spec.name) {
        None => (Some(UncertaintyCase::SensorLost { variable }), SensorStatus::Lost),
        Some(v) if !spec.is_valid(v) => (
            Some(UncertaintyCase::SensorDecalibrated { variable }),
            SensorStatus::Decalibrated,
        ),
        Some(_) => match prior_status {
            SensorStatus::Lost | SensorStatus::Decalibrated => {
                (Some(UncertaintyCase::SensorUp { variable }), SensorStatus::Healthy)
            }
            SensorStatus::Healthy => (None, SensorStatus::Healthy),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reqmodel::variable::Preprocessing;
    use proptest::prelude::*;

    fn cr1() -> ContextualRequirement {
        ContextualRequirement::new(
            "cr1",
            "Driver is drowsy",
            "perclos>=0.15 AND hbpm<=0.60 AND hbpm>=0.56".parse().unwrap(),
            "seat_vibration",
        )
    }

    fn beh(active: bool) -> BehaviorState {
        BehaviorState::new("seat_vibration", active, false).unwrap()
    }

    #[test]
    fn satisfaction_table() {
        let r = cr1();
        assert_eq!(
            assess_satisfaction(&r, Truth::True, &beh(false)).unwrap(),
            Verdict::Uncertain(UncertaintyCase::Violation { requirement_id: "cr1".into() })
        );
        assert_eq!(assess_satisfaction(&r, Truth::False, &beh(false)).unwrap(), Verdict::Satisfied);
        assert_eq!(assess_satisfaction(&r, Truth::True, &beh(true)).unwrap(), Verdict::Satisfied);
        assert_eq!(
            assess_satisfaction(&r, Truth::False, &beh(true)).unwrap(),
            Verdict::Uncertain(UncertaintyCase::PotentiallyWrongContext { requirement_id: "cr1".into() })
        );
        assert_eq!(assess_satisfaction(&r, Truth::Unknown, &beh(true)).unwrap(), Verdict::Indeterminate);
    }

    #[test]
    fn empty_operationalization_is_case1() {
        let mut r = cr1();
        r.operationalization = Default::default();
        assert_eq!(
            assess_satisfaction(&r, Truth::Unknown, &beh(false)).unwrap(),
            Verdict::Uncertain(UncertaintyCase::NoOperationalization)
        );
    }

    #[test]
    fn mismatched_behavior_is_an_error() {
        let other = BehaviorState::inactive("lane_keeping");
        assert!(matches!(
            assess_satisfaction(&cr1(), Truth::True, &other),
            Err(ReqModelError::BehaviorMismatch { .. })
        ));
    }

    #[test]
    fn anomaly_examples() {
        let hbpm = VariableSpec::new("hbpm", 0.0, 120.0, 0.3, 1.0, Preprocessing::None).unwrap();
        let s = EnvironmentSnapshot::from_values(0, [("hbpm", 0.25)]);
        let (case, status) = detect_sensor_anomaly(&hbpm, &s, SensorStatus::Healthy);
        assert_eq!(case, Some(UncertaintyCase::SensorDecalibrated { variable: "hbpm".into() }));
        assert_eq!(status, SensorStatus::Decalibrated);

        let face = VariableSpec::with_range("facePosition", 0.0, 1.0).unwrap();
        let missing = EnvironmentSnapshot::new(1);
        assert_eq!(
            detect_sensor_anomaly(&face, &missing, SensorStatus::Healthy),
            (Some(UncertaintyCase::SensorLost { variable: "facePosition".into() }), SensorStatus::Lost)
        );

        let back = EnvironmentSnapshot::from_values(2, [("facePosition", 1.0)]);
        assert_eq!(
            detect_sensor_anomaly(&face, &back, SensorStatus::Decalibrated),
            (Some(UncertaintyCase::SensorUp { variable: "facePosition".into() }), SensorStatus::Healthy)
        );
        assert_eq!(detect_sensor_anomaly(&face, &back, SensorStatus::Healthy), (None, SensorStatus::Healthy));
    }

    #[test]
    fn out_of_range_detected_before_clamping() {
        let face = VariableSpec::with_range("facePosition", 0.0, 1.0).unwrap();
        let mut s = EnvironmentSnapshot::new(0);
        s.insert_raw(&face, 1.4);
        assert_eq!(s.get("facePosition"), Some(1.0));
        let (case, _) = detect_sensor_anomaly(&face, &s, SensorStatus::Healthy);
        assert_eq!(case.map(|c| c.kind()), Some(CaseKind::Case2b));
    }

    fn status() -> impl Strategy<Value = SensorStatus> {
        prop::sample::select(vec![SensorStatus::Healthy, SensorStatus::Lost, SensorStatus::Decalibrated])
    }

    proptest! {
        #[test]
        fn sensor_up_only_after_fault(prior in status(), reading in prop::option::of(-0.5f64..1.5)) {
            let face = VariableSpec::with_range("facePosition", 0.0, 1.0).unwrap();
            let mut s = EnvironmentSnapshot::new(0);
            if let Some(v) = reading {
                s.insert_normalized("facePosition", v);
            }
            let (case, _) = detect_sensor_anomaly(&face, &s, prior);
            if matches!(case, Some(UncertaintyCase::SensorUp { .. })) {
                prop_assert!(prior != SensorStatus::Healthy);
            }
        }

        #[test]
        fn known_context_yields_exactly_one_of_three(ctx in any::<bool>(), active in any::<bool>()) {
            let v = assess_satisfaction(&cr1(), ctx.into(), &beh(active)).unwrap();
            let ok = match v {
                Verdict::Satisfied => ctx == active,
                Verdict::Uncertain(UncertaintyCase::Violation { .. }) => ctx && !active,
                Verdict::Uncertain(UncertaintyCase::PotentiallyWrongContext { .. }) => !ctx && active,
                _ => false,
            };
            prop_assert!(ok);
        }
    }
}
