//! Expected outcome of each scenario and how closely an enacted
//! operationalization matches it.

use sacre_core::loopcore::KbRecord;
use sacre_core::reqmodel::Operationalization;
use sacre_vehicle::config::CTX2;
use sacre_vehicle::ScenarioKind;

/// Requirement and operationalization a mined scenario should end with.
pub fn expected_adaptation(kind: ScenarioKind) -> Option<(&'static str, Operationalization)> {
    let (req, text) = match kind {
        ScenarioKind::Us1 => ("cr1", "perclos>=0.15 AND hbpm<=0.60 AND hbpm>=0.56 AND facePosition=1".to_string()),
        ScenarioKind::Us2 => ("cr2", format!("{CTX2} AND hosw=0.5")),
        ScenarioKind::Us3 => ("cr3", "perclos>0.30 AND facePosition=1 AND hbpm<=0.45 AND hosw=0".to_string()),
        ScenarioKind::Us5 => (
            "cr3",
            "perclos<0.05 AND facePosition=0 AND hbpm<=0.75 AND hbpm>=0.56 AND hosw<1".to_string(),
        ),
        ScenarioKind::Us4a | ScenarioKind::Us4b => return None,
    };
    Some((req, text.parse().expect("static operationalization")))
}

/// Requirements a sensor-decalibration scenario should strip, with the
/// variable removed.
pub fn expected_strips(kind: ScenarioKind) -> Vec<(&'static str, Operationalization)> {
    match kind {
        ScenarioKind::Us4a => vec![
            ("cr2", "perclos>=0.21 AND hbpm<=0.55 AND hbpm>=0.46".parse().unwrap()),
            ("cr3", "perclos>0.30 AND hbpm<=0.45 AND hosw<1".parse().unwrap()),
        ],
        _ => Vec::new(),
    }
}

/// Fraction of records on which both operationalizations give the same
/// answer. Records where either is undecidable are skipped.
pub fn agreement(a: &Operationalization, b: &Operationalization, records: &[KbRecord]) -> Option<f64> {
    let mut same = 0usize;
    let mut total = 0usize;
    for r in records {
        let lookup = |v: &str| if r.faulty.contains(v) { None } else { r.values.get(v).copied() };
        if let (Some(x), Some(y)) = (a.holds_on(lookup), b.holds_on(lookup)) {
            total += 1;
            same += usize::from(x == y);
        }
    }
    (total > 0).then(|| same as f64 / total as f64)
}
