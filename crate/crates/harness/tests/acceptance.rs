//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sacre_core::loopcore::{
    Clock, Frame, IdGen, Loop, LoopError, ManagedLink, Monitor, MonitorInput, PolicySet, Role,
};
use sacre_core::mining::{
    arff_read, arff_to_string, confusion_measures, cross_validate, cross_validate_counts, learn_ruleset,
    stratified_folds, Class, ConfusionCounts, Dataset,
};
use sacre_core::reqmodel::{BehaviorState, CaseKind, ContextualRequirement, EnvironmentSnapshot, RequirementSet};
use sacre_harness::{
    expected_adaptation, expected_strips, ppmcc, run_scenario, sample_size, Outcome, ReplicationResult, RunOptions,
};
use sacre_vehicle::ScenarioKind;

const SEED: u64 = 42;
const REPLICATIONS: u32 = 20;
const SCALE: f64 = 0.1;
const MIN_MEASURE: f64 = 0.95;
const SUITE_BUDGET: Duration = Duration::from_secs(120);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct Suite {
    kind: ScenarioKind,
    scale: f64,
    elapsed: Duration,
    results: Vec<ReplicationResult>,
}

fn run(kind: ScenarioKind, scale: f64, out: &Path) -> Suite {
    let options = RunOptions {
        seed: SEED,
        scale,
        realtime: false,
    };
    let start = Instant::now();
    let results = run_scenario(kind, REPLICATIONS, options, &out.join(format!("{scale}")))
        .unwrap_or_else(|e| panic!("{kind} at scale {scale}: {e}"));
    Suite {
        kind,
        scale,
        elapsed: start.elapsed(),
        results,
    }
}

fn mined_row<'a>(r: &'a ReplicationResult, req: &str) -> Option<&'a sacre_harness::AdaptationRow> {
    r.adaptations.iter().find(|a| a.requirement_id.as_deref() == Some(req))
}

fn scenario_semantics(suites: &[Suite]) -> Verdict {
    let mut problems = Vec::new();
    let mut worst = 1.0f64;
    for s in suites {
        let (req, _) = expected_adaptation(s.kind).expect("mined scenario");
        for r in &s.results {
            let ok = r.outcome == Outcome::Adapted && mined_row(r, req).is_some();
            let agreement = r.agreement.unwrap_or(0.0);
            worst = worst.min(agreement);
            if !ok || agreement < 0.99 {
                problems.push(format!("{} rep {}: {:?} agreement {agreement}", s.kind, r.replication_index, r.outcome));
            }
        }
        if s.elapsed > SUITE_BUDGET {
            problems.push(format!("{} took {:.1?}", s.kind, s.elapsed));
        }
    }
    let times: Vec<String> = suites.iter().map(|s| format!("{} {:.1?}", s.kind, s.elapsed)).collect();
    Verdict::new(
        problems.is_empty(),
        format!("min agreement {worst:.4}; runtimes {}; {}", times.join(", "), problems.join("; ")),
    )
}

fn mining_quality(suites: &[Suite]) -> Verdict {
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for s in suites {
        let rows: Vec<_> = s
            .results
            .iter()
            .flat_map(|r| r.adaptations.iter())
            .filter_map(|a| a.measures)
            .collect();
        if let Some(m) = rows.iter().find(|m| m.min() < MIN_MEASURE) {
            problems.push(format!("{} accepted {m:?}", s.kind));
        }
        let perfect = s
            .results
            .iter()
            .filter(|r| {
                r.adaptations
                    .iter()
                    .find_map(|a| a.measures)
                    .is_some_and(|m| m.precision == 1.0 && m.recall == 1.0 && m.f_measure == 1.0)
            })
            .count();
        let share = perfect as f64 / s.results.len() as f64;
        if matches!(s.kind, ScenarioKind::Us1 | ScenarioKind::Us2 | ScenarioKind::Us3) && share < 0.9 {
            problems.push(format!("{} perfect share {share}", s.kind));
        }
        summary.push(format!("{} perfect {perfect}/{}", s.kind, s.results.len()));
    }
    Verdict::new(problems.is_empty(), format!("{}; {}", summary.join(", "), problems.join("; ")))
}

fn case2_path(us4a: &Suite, us4b: &Suite) -> Verdict {
    let mut problems = Vec::new();
    let strips = expected_strips(ScenarioKind::Us4a);
    for r in &us4a.results {
        if r.learner_calls != 0 {
            problems.push(format!("us4a rep {} called the learner", r.replication_index));
        }
        for (req, op) in &strips {
            match mined_row(r, req) {
                Some(a) if a.operationalization == op.to_string() => {}
                other => problems.push(format!(
                    "us4a rep {} {req}: {:?}",
                    r.replication_index,
                    other.map(|a| &a.operationalization)
                )),
            }
        }
        if r.iterations_to_adapt().is_none_or(|n| n > 3) {
            problems.push(format!("us4a rep {} took {:?} iterations", r.replication_index, r.iterations_to_adapt()));
        }
    }
    for r in &us4b.results {
        let restored = r.adaptations.iter().any(|a| a.operationalization == "+facePosition");
        if r.change_plans != 0 || !restored {
            problems.push(format!("us4b rep {}: {} plans, restored {restored}", r.replication_index, r.change_plans));
        }
        if r.iterations_to_adapt().is_none_or(|n| n > 3) {
            problems.push(format!("us4b rep {} took {:?} iterations", r.replication_index, r.iterations_to_adapt()));
        }
    }
    let slowest = us4a
        .results
        .iter()
        .chain(&us4b.results)
        .filter_map(|r| r.iterations_to_adapt())
        .max();
    Verdict::new(
        problems.is_empty(),
        format!("slowest {slowest:?} iterations after injection; {}", problems.join("; ")),
    )
}

fn mean_response(s: &Suite) -> f64 {
    let times: Vec<f64> = s.results.iter().filter_map(|r| r.response_time_ms()).collect();
    times.iter().sum::<f64>() / times.len() as f64
}

fn mean_dataset_size(s: &Suite) -> f64 {
    let sizes: Vec<f64> = s
        .results
        .iter()
        .filter_map(|r| r.adaptations.iter().find_map(|a| a.dataset_size))
        .map(|n| n as f64)
        .collect();
    sizes.iter().sum::<f64>() / sizes.len() as f64
}

fn response_structure(us1: &[Suite], us4b: &[Suite]) -> Verdict {
    let sizes: Vec<f64> = us1.iter().map(mean_dataset_size).collect();
    let times: Vec<f64> = us1.iter().map(mean_response).collect();
    let mut problems = Vec::new();
    let mut order: Vec<usize> = (0..us1.len()).collect();
    order.sort_by(|&a, &b| sizes[a].total_cmp(&sizes[b]));
    if order.windows(2).any(|w| times[w[1]] < times[w[0]]) {
        problems.push("mean time decreases with dataset size".to_string());
    }
    let r = ppmcc(&sizes, &times);
    match &r {
        Ok(r) if *r >= 0.9 => {}
        other => problems.push(format!("ppmcc {other:?}")),
    }
    for (m, c) in us1.iter().zip(us4b) {
        let (tm, tc) = (mean_response(m), mean_response(c));
        if tc >= tm {
            problems.push(format!("scale {}: case 2 {tc:.4} ms >= mining {tm:.4} ms", m.scale));
        }
    }
    let pairs: Vec<String> = us1
        .iter()
        .zip(us4b)
        .enumerate()
        .map(|(i, (m, c))| format!("scale {}: size {:.0} mining {:.3} ms case2 {:.4} ms", m.scale, sizes[i], times[i], mean_response(c)))
        .collect();
    Verdict::new(
        problems.is_empty(),
        format!("{}; ppmcc {:.4}; {}", pairs.join(", "), r.unwrap_or(f64::NAN), problems.join("; ")),
    )
}

fn formula() -> Verdict {
    let n = sample_size(10_950, 1.96, 0.1, 0.5, 0.5);
    Verdict::new((n - 95.21).abs() <= 0.01, format!("n = {n:.4}"))
}

// ---- learner suite --------------------------------------------------------

type Box = Vec<(usize, f64, f64)>;

fn in_box(b: &Box, x: &[f64]) -> bool {
    b.iter().all(|&(v, lo, hi)| x[v] >= lo && x[v] <= hi)
}

fn random_box(rng: &mut ChaCha8Rng, vars: usize) -> Box {
    let mut b = Vec::new();
    for v in 0..vars {
        match rng.random_range(0..3) {
            0 if b.is_empty() && v + 1 == vars => {
                let lo = rng.random_range(0.2..0.6);
                b.push((v, lo, 1.0));
            }
            0 => {}
            1 => b.push((v, rng.random_range(0.2..0.6), 1.0)),
            _ => b.push((v, 0.0, rng.random_range(0.4..0.8))),
        }
    }
    b
}

fn grid_value(rng: &mut ChaCha8Rng) -> f64 {
    f64::from(rng.random_range(0..=100u32)) / 100.0
}

fn dataset(points: &[(Vec<f64>, bool)], vars: usize) -> Dataset {
    let names: Vec<String> = (0..vars).map(|v| format!("x{v}")).collect();
    let mut ds = Dataset::numeric("synthetic", &names, "behavior");
    for (x, c) in points {
        ds.push_numeric(x, Class::from(*c)).unwrap();
    }
    ds
}

fn training_counts(ds: &Dataset, seed: u64) -> ConfusionCounts {
    let rs = learn_ruleset(ds, seed);
    let mut c = ConfusionCounts::default();
    for row in ds.rows() {
        c.record(row.class.is_active(), rs.classify(ds, row).is_active());
    }
    c
}

/// Fewest training errors of any single conjunction, each variable
/// unconstrained or bounded by values seen in the data.
fn exhaustive_single_rule_errors(points: &[(Vec<f64>, bool)], vars: usize) -> usize {
    let mut bounds: Vec<Vec<(f64, f64)>> = Vec::new();
    for v in 0..vars {
        let mut values: Vec<f64> = points.iter().map(|p| p.0[v]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut options = vec![(f64::NEG_INFINITY, f64::INFINITY)];
        for (i, &lo) in values.iter().enumerate() {
            for &hi in &values[i..] {
                options.push((lo, hi));
            }
            options.push((lo, f64::INFINITY));
            options.push((f64::NEG_INFINITY, lo));
        }
        bounds.push(options);
    }
    let mut best = usize::MAX;
    let mut choice = vec![0usize; vars];
    loop {
        let errors = points
            .iter()
            .filter(|(x, c)| {
                let covered = (0..vars).all(|v| {
                    let (lo, hi) = bounds[v][choice[v]];
                    x[v] >= lo && x[v] <= hi
                });
                covered != *c
            })
            .count();
        best = best.min(errors);
        let mut v = 0;
        loop {
            if v == vars {
                return best;
            }
            choice[v] += 1;
            if choice[v] < bounds[v].len() {
                break;
            }
            choice[v] = 0;
            v += 1;
        }
    }
}

fn learner_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut problems = Vec::new();

    // noise-free DNF targets
    let mut worst_precision = 1.0f64;
    let mut worst_recall = 1.0f64;
    let mut targets = 0;
    while targets < 10 {
        let vars = rng.random_range(2..=3);
        let clauses: Vec<Box> = (0..rng.random_range(1..=2)).map(|_| random_box(&mut rng, vars)).collect();
        let points: Vec<(Vec<f64>, bool)> = (0..300)
            .map(|_| {
                let x: Vec<f64> = (0..vars).map(|_| grid_value(&mut rng)).collect();
                let c = clauses.iter().any(|b| in_box(b, &x));
                (x, c)
            })
            .collect();
        let per_clause_ok = clauses
            .iter()
            .all(|b| points.iter().filter(|(x, _)| in_box(b, x)).count() >= 30);
        let negatives = points.iter().filter(|p| !p.1).count();
        if !per_clause_ok || negatives < 30 {
            continue;
        }
        targets += 1;
        let ds = dataset(&points, vars);
        let m = training_counts(&ds, 7).measures();
        worst_precision = worst_precision.min(m.precision);
        worst_recall = worst_recall.min(m.recall);
        if m.recall < 1.0 || m.precision < 0.95 {
            problems.push(format!("target {targets} ({clauses:?}): {m:?}"));
        }
        // determinism per (dataset, seed)
        if learn_ruleset(&ds, 3) != learn_ruleset(&ds, 3) || cross_validate(&ds, 10, 3).ok() != cross_validate(&ds, 10, 3).ok()
        {
            problems.push(format!("target {targets} not deterministic"));
        }
    }

    // exhaustive single-rule oracle on small datasets
    let mut oracle_cases = 0;
    while oracle_cases < 25 {
        let n = rng.random_range(12..=30);
        let target = random_box(&mut rng, 2);
        let points: Vec<(Vec<f64>, bool)> = (0..n)
            .map(|_| {
                let x = vec![grid_value(&mut rng), grid_value(&mut rng)];
                let c = in_box(&target, &x);
                (x, c)
            })
            .collect();
        let pos = points.iter().filter(|p| p.1).count();
        if pos < 2 || pos + 2 > n {
            continue;
        }
        oracle_cases += 1;
        let oracle = exhaustive_single_rule_errors(&points, 2);
        let c = training_counts(&dataset(&points, 2), 11);
        let learner = c.fp + c.fn_;
        if learner != oracle {
            problems.push(format!("oracle case {oracle_cases}: learner {learner} errors, oracle {oracle}"));
        }
    }

    // ARFF identity and micro-averaging
    for case in 0..10 {
        let n = rng.random_range(20..80);
        let points: Vec<(Vec<f64>, bool)> = (0..n)
            .map(|_| {
                let x = vec![rng.random::<f64>(), grid_value(&mut rng), rng.random_range(-5.0..5.0)];
                let c = x[1] > 0.5 || rng.random_bool(0.1);
                (x, c)
            })
            .collect();
        let ds = dataset(&points, 3);
        let text = arff_to_string(&ds);
        match arff_read(&text) {
            Ok(back) if back == ds && arff_to_string(&back) == text => {}
            other => problems.push(format!("arff case {case}: {:?}", other.err())),
        }
        let (k, seed) = (10, 5 + case);
        let Ok(folds) = stratified_folds(&ds, k, seed) else {
            continue;
        };
        let mut total = ConfusionCounts::default();
        for fold in 0..k {
            let train: Vec<usize> = (0..ds.len()).filter(|&i| folds[i] != fold).collect();
            let rs = learn_ruleset(&ds.subset(&train), seed.wrapping_add(fold as u64));
            for (i, row) in ds.rows().iter().enumerate() {
                if folds[i] == fold {
                    total.record(row.class.is_active(), rs.classify(&ds, row).is_active());
                }
            }
        }
        let per_fold: ConfusionCounts = cross_validate_counts(&ds, k, seed).unwrap().into_iter().fold(
            ConfusionCounts::default(),
            |mut acc, c| {
                acc += c;
                acc
            },
        );
        let micro = cross_validate(&ds, k, seed).unwrap();
        if per_fold != total || micro != confusion_measures(total.tp, total.fp, total.fn_) {
            problems.push(format!("micro-average case {case} differs"));
        }
    }
    Verdict::new(
        problems.is_empty(),
        format!(
            "10 DNF targets (worst precision {worst_precision:.3}, recall {worst_recall:.3}), {oracle_cases} oracle datasets, 10 ARFF/CV datasets; {}",
            problems.join("; ")
        ),
    )
}

// ---- loop invariants ------------------------------------------------------

fn missing_roles_refused() -> Vec<String> {
    let mut problems = Vec::new();
    for role in Role::MAPE_K {
        let mut policies = PolicySet::default();
        policies.manager.elements.retain(|e| e.role != role);
        let (_ftx, frx) = crossbeam_channel::unbounded();
        let (ptx, _prx) = crossbeam_channel::unbounded();
        let link = ManagedLink {
            id: "vehicle".into(),
            frames: frx,
            effector: ptx,
        };
        match Loop::setup(policies, vec![link]) {
            Err(LoopError::MissingRoles { roles }) if roles == [role] => {}
            Err(e) => problems.push(format!("missing {role:?}: unexpected error {e}")),
            Ok(_) => problems.push(format!("setup accepted a loop without {role:?}")),
        }
    }
    problems
}

/// Feeds the Monitor a random pattern of violating and satisfied frames and
/// compares its Case 3 symptoms with a run-length counter.
fn debounce_matches_counter() -> Vec<String> {
    let cr1 = ContextualRequirement::new(
        "cr1",
        "Driver is drowsy",
        "perclos>=0.15 AND hbpm<=0.60 AND hbpm>=0.56".parse().unwrap(),
        "seat_vibration",
    );
    let reqs = RequirementSet::new(vec![cr1]).unwrap();
    let frame = |tick: u64, violating: bool| Frame {
        source: "vehicle".into(),
        tick,
        snapshot: EnvironmentSnapshot::from_values(
            tick,
            [("perclos", 0.4), ("facePosition", 1.0), ("hbpm", 0.58), ("hosw", 1.0)],
        ),
        requirements: reqs.clone(),
        behaviors: vec![BehaviorState::new("seat_vibration", !violating, false).unwrap()],
    };
    let kb = PolicySet::default_kb();
    let thresholds = kb.min_uncertainty_iterations.clone();
    let needed = thresholds.get(CaseKind::Case3);
    let active: BTreeSet<String> = kb.variables.into_iter().collect();
    let mut monitor = Monitor::new(PolicySet::default_monitor());
    let mut ids = IdGen::default();
    let clock = Clock::start();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut run = 0;
    let mut problems = Vec::new();
    for t in 1..=2000u64 {
        let violating = rng.random_bool(0.7);
        let f = frame(t, violating);
        let out = monitor.tick(
            MonitorInput {
                iteration: t,
                frame: &f,
                active: &active,
                thresholds: &thresholds,
            },
            &mut ids,
            &clock,
        );
        let emitted = out.symptoms.iter().any(|s| s.case.kind() == CaseKind::Case3);
        run = if violating { run + 1 } else { 0 };
        let expected = run >= needed;
        if expected {
            run = 0;
        }
        if emitted != expected {
            problems.push(format!("tick {t}: emitted {emitted}, expected {expected}"));
            break;
        }
    }
    problems
}

fn loop_invariants(mined: &[Suite]) -> Verdict {
    let mut problems = missing_roles_refused();
    problems.extend(debounce_matches_counter());
    let mut enactments = 0;
    for s in mined {
        for r in &s.results {
            enactments += r.change_plans;
            let tag = format!("{} rep {}", s.kind, r.replication_index);
            if !r.provenance_verified {
                problems.push(format!("{tag}: provenance chain incomplete"));
            }
            if r.grace_symptoms != 0 {
                problems.push(format!("{tag}: {} symptoms in the grace period", r.grace_symptoms));
            }
            if r.first_mining_symptom.is_none_or(|i| i < r.injection_iteration + 2) {
                problems.push(format!("{tag}: first case 3/4 symptom at {:?}", r.first_mining_symptom));
            }
            for a in &r.adaptations {
                if a.measures.is_none_or(|m| m.min() < MIN_MEASURE) {
                    problems.push(format!("{tag}: enacted with {:?}", a.measures));
                }
            }
        }
    }
    Verdict::new(
        problems.is_empty(),
        format!("5 missing-role topologies refused, 2000-tick debounce trace, {enactments} enactments checked; {}", problems.join("; ")),
    )
}

fn pre_injection(all: &[&Suite]) -> Verdict {
    let mut checked = BTreeSet::new();
    let mut problems = Vec::new();
    for s in all {
        checked.insert(s.kind);
        for r in &s.results {
            if r.pre_injection_unsatisfied != 0 {
                problems.push(format!(
                    "{} scale {} rep {}: {} unsatisfied verdicts",
                    s.kind, s.scale, r.replication_index, r.pre_injection_unsatisfied
                ));
            }
        }
    }
    if checked.len() != ScenarioKind::ALL.len() {
        problems.push(format!("only {checked:?} were generated"));
    }
    let runs: usize = all.iter().map(|s| s.results.len()).sum();
    Verdict::new(problems.is_empty(), format!("{runs} generated runs; {}", problems.join("; ")))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let out = tmp.path();

    let mined: Vec<Suite> = [ScenarioKind::Us1, ScenarioKind::Us2, ScenarioKind::Us3, ScenarioKind::Us5]
        .into_iter()
        .map(|k| run(k, SCALE, out))
        .collect();
    let us4a = run(ScenarioKind::Us4a, SCALE, out);
    let scales = [0.02, 0.05, 0.1];
    let us1_scaled: Vec<Suite> = scales.iter().map(|&s| run(ScenarioKind::Us1, s, &out.join("scaled"))).collect();
    let us4b_scaled: Vec<Suite> = scales.iter().map(|&s| run(ScenarioKind::Us4b, s, out)).collect();

    let mut all: Vec<&Suite> = mined.iter().collect();
    all.push(&us4a);
    all.extend(&us1_scaled);
    all.extend(&us4b_scaled);

    let verdicts = [
        ("scenario semantics", scenario_semantics(&mined)),
        ("mining quality", mining_quality(&mined)),
        ("case 2 path", case2_path(&us4a, &us4b_scaled[2])),
        ("response-time structure", response_structure(&us1_scaled, &us4b_scaled)),
        ("sample-size formula", formula()),
        ("learner properties", learner_suite()),
        ("loop invariants", loop_invariants(&mined)),
        ("pre-injection soundness", pre_injection(&all)),
    ];
    let mut failed = 0;
    for (i, (name, v)) in verdicts.iter().enumerate() {
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail.trim_end_matches("; ")
        );
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
