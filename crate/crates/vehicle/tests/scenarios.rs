use proptest::prelude::*;
use sacre_core::reqmodel::{assess_satisfaction, Truth, Verdict};
use sacre_vehicle::trace::{read_actions_file, read_sensor_file};
use sacre_vehicle::{
    effective_active, generate, Action, Actuator, ActuatorState, DriverOverride, ScenarioKind, Simulation, Vehicle,
    VehicleError, SACRE_PERIOD_MS, VEHICLE_PERIOD_MS,
};

const SCALE: f64 = 0.1;

/// Closed-eye fraction over the last `w` readings, counted directly.
fn perclos_oracle(eyes: &[f64], w: usize) -> f64 {
    let tail = &eyes[eyes.len().saturating_sub(w)..];
    tail.iter().filter(|e| **e < 0.2).count() as f64 / tail.len() as f64
}

#[test]
fn same_seed_same_files() {
    for kind in ScenarioKind::ALL {
        let a = generate(kind, 42, SCALE).unwrap();
        let b = generate(kind, 42, SCALE).unwrap();
        assert_eq!(a, b);
        let c = generate(kind, 43, SCALE).unwrap();
        assert_ne!(a.trace, c.trace, "{kind}");
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(ScenarioKind::Us5, 9, 0.01).unwrap();
    let files = g.write(dir.path()).unwrap();
    assert_eq!(read_sensor_file(&files.sensors).unwrap(), g.trace);
    assert_eq!(read_actions_file(&files.actions).unwrap(), g.actions);
    assert_eq!(sacre_vehicle::VehicleConfig::load(&files.config).unwrap(), g.config());
}

#[test]
fn timing_matches_the_periods() {
    let g = generate(ScenarioKind::Us1, 7, SCALE).unwrap();
    assert_eq!(g.spec.injection_iteration, 100);
    assert_eq!(g.spec.injection_tick, 100 * SACRE_PERIOD_MS / VEHICLE_PERIOD_MS);
    assert_eq!(g.trace.len() as u64, g.spec.total_ticks);
}

#[test]
fn us1_injection_disables_vibration_in_ctx1() {
    let g = generate(ScenarioKind::Us1, 7, 1.0).unwrap();
    let k = g.spec.injection_tick;
    assert_eq!(g.actions[0].tick, k);
    assert_eq!(g.actions[0].action, Action::Disable);
    let mut sim = Simulation::new(Vehicle::new(g.config()).unwrap(), g.trace.clone(), g.actions.clone());
    let mut ctx1_disabled = 0;
    while let Some(out) = sim.step() {
        let out = out.unwrap();
        if out.tick >= k && out.contexts["cr1"] == Truth::True && !out.behaviors[0].active {
            ctx1_disabled += 1;
            assert_eq!(out.snapshot.get("facePosition"), Some(0.0));
        }
    }
    assert!(ctx1_disabled >= 100, "{ctx1_disabled}");
}

#[test]
fn us4a_face_leaves_its_range_at_injection() {
    let g = generate(ScenarioKind::Us4a, 1, SCALE).unwrap();
    let k = g.spec.injection_tick as usize;
    assert!(g.trace[..k].iter().all(|r| r.face_position.unwrap() <= 1.0));
    assert!(g.trace[k..].iter().all(|r| r.face_position == Some(1.4)));
}

#[test]
fn perclos_matches_oracle() {
    let g = generate(ScenarioKind::Us3, 5, SCALE).unwrap();
    let mut v = Vehicle::new(g.config()).unwrap();
    let mut eyes = Vec::new();
    for row in &g.trace {
        eyes.push(row.eyes_state.unwrap());
        let out = v.tick(row, &[]).unwrap();
        let got = out.snapshot.get("perclos").unwrap();
        assert!((got - perclos_oracle(&eyes, 60)).abs() < 1e-12, "tick {}", row.tick);
    }
}

#[test]
fn pre_injection_prefix_is_satisfied() {
    for kind in ScenarioKind::ALL {
        let g = generate(kind, 42, SCALE).unwrap();
        let mut sim = Simulation::new(Vehicle::new(g.config()).unwrap(), g.trace.clone(), g.actions.clone());
        while let Some(out) = sim.step() {
            let out = out.unwrap();
            if out.tick >= g.spec.injection_tick {
                break;
            }
            for (r, b) in sim.vehicle.requirements().iter().zip(&out.behaviors) {
                let verdict = assess_satisfaction(r, out.contexts[&r.id], b).unwrap();
                assert_eq!(verdict, Verdict::Satisfied, "{kind} {} tick {}", r.id, out.tick);
            }
        }
    }
}

#[test]
fn every_context_occurs_before_injection() {
    let g = generate(ScenarioKind::Us3, 42, SCALE).unwrap();
    let mut sim = Simulation::new(Vehicle::new(g.config()).unwrap(), g.trace.clone(), vec![]);
    let mut seen = std::collections::BTreeSet::new();
    while let Some(out) = sim.step() {
        let out = out.unwrap();
        if out.tick < g.spec.injection_tick {
            seen.extend(out.contexts.iter().filter(|(_, t)| **t == Truth::True).map(|(id, _)| id.clone()));
        }
    }
    assert_eq!(seen.len(), 3, "{seen:?}");
}

#[test]
fn small_budgets_are_refused() {
    let e = generate(ScenarioKind::Us5, 1, 0.0005).unwrap_err();
    assert!(matches!(e, VehicleError::BudgetTooSmall { .. }));
    assert!(e.to_string().contains("us5"), "{e}");
}

fn override_strategy() -> impl Strategy<Value = DriverOverride> {
    prop::sample::select(DriverOverride::ALL.to_vec())
}

fn action_strategy() -> impl Strategy<Value = Action> {
    prop::sample::select(vec![Action::TurnOn, Action::TurnOff, Action::Disable, Action::Enable])
}

proptest! {
    #[test]
    fn disabled_is_never_active(cmd: bool, o in override_strategy()) {
        let active = effective_active(cmd, o);
        if o == DriverOverride::Disabled {
            prop_assert!(!active);
        }
        if o == DriverOverride::None {
            prop_assert_eq!(active, cmd);
        }
    }

    #[test]
    fn disable_wins_until_enable(steps in prop::collection::vec((any::<bool>(), action_strategy()), 1..40)) {
        let mut s = ActuatorState::new(Actuator::LaneKeeping);
        for (cmd, action) in steps {
            s.command(cmd);
            s.apply(action).unwrap();
            let disabled = action == Action::Disable;
            prop_assert_eq!(s.is_disabled(), disabled);
            if disabled {
                prop_assert!(!s.effective_active());
            }
        }
    }
}
