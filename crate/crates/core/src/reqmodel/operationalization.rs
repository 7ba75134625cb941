//! Context operationalizations: disjunctions of threshold conjunctions over
//! normalized sensor variables, plus their textual form
//! (`perclos>=0.15 AND hbpm<=0.6 OR ...`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::snapshot::EnvironmentSnapshot;
use super::variable::is_identifier;
use super::ReqModelError;

/// Tolerance for `=` on continuous values.
pub const EQUALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            CmpOp::Ge => value >= threshold,
            CmpOp::Le => value <= threshold,
            CmpOp::Gt => value > threshold,
            CmpOp::Lt => value < threshold,
            CmpOp::Eq => (value - threshold).abs() <= EQUALITY_TOLERANCE,
        }
    }

    fn bounds_below(self) -> bool {
        matches!(self, CmpOp::Ge | CmpOp::Gt | CmpOp::Eq)
    }

    fn bounds_above(self) -> bool {
        matches!(self, CmpOp::Le | CmpOp::Lt | CmpOp::Eq)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicCondition {
    pub variable: String,
    pub op: CmpOp,
    pub threshold: f64,
}

impl AtomicCondition {
    pub fn new(variable: impl Into<String>, op: CmpOp, threshold: f64) -> Result<Self, ReqModelError> {
        let variable = variable.into();
        if !is_identifier(&variable) {
            return Err(ReqModelError::Parse {
                input: variable,
                reason: "variable is not an identifier".into(),
            });
        }
        if !threshold.is_finite() || !(0.0..=1.0).contains(&threshold) {
            return Err(ReqModelError::Parse {
                input: format!("{variable}{op}{threshold}"),
                reason: "threshold must lie in [0, 1]".into(),
            });
        }
        Ok(Self { variable, op, threshold })
    }

    pub fn holds(&self, value: f64) -> bool {
        self.op.holds(value, self.threshold)
    }
}

impl fmt::Display for AtomicCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.variable, self.op, self.threshold)
    }
}

/// Three-valued context evaluation result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// A conjunction of atomic conditions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clause(Vec<AtomicCondition>);

impl Clause {
    /// Builds a clause, rejecting more than one lower or upper bound on the
    /// same variable (`=` counts as both).
    pub fn new(conditions: Vec<AtomicCondition>) -> Result<Self, ReqModelError> {
        let mut lower: BTreeSet<&str> = BTreeSet::new();
        let mut upper: BTreeSet<&str> = BTreeSet::new();
        for c in &conditions {
            if c.op.bounds_below() && !lower.insert(&c.variable) {
                return Err(ReqModelError::ConflictingBounds { variable: c.variable.clone() });
            }
            if c.op.bounds_above() && !upper.insert(&c.variable) {
                return Err(ReqModelError::ConflictingBounds { variable: c.variable.clone() });
            }
        }
        Ok(Self(conditions))
    }

    pub fn conditions(&self) -> &[AtomicCondition] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Assumes every referenced variable is present.
    fn holds(&self, snapshot: &EnvironmentSnapshot) -> bool {
        self.0
            .iter()
            .all(|c| snapshot.get(&c.variable).is_some_and(|v| c.holds(v)))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Disjunctive normal form over atomic conditions. No clauses means the
/// context is not operationalized.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Operationalization {
    clauses: Vec<Clause>,
}

impl Operationalization {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Drops clauses without conditions.
    pub fn new(clauses: Vec<Clause>) -> Self {
        Self {
            clauses: clauses.into_iter().filter(|c| !c.is_empty()).collect(),
        }
    }

    pub fn from_conjunctions(conjunctions: Vec<Vec<AtomicCondition>>) -> Result<Self, ReqModelError> {
        let clauses = conjunctions.into_iter().map(Clause::new).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(clauses))
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.clauses
            .iter()
            .flat_map(|c| c.0.iter().map(|a| a.variable.as_str()))
            .collect()
    }

    pub fn references(&self, variable: &str) -> bool {
        self.clauses.iter().any(|c| c.0.iter().any(|a| a.variable == variable))
    }

    /// Appends a clause. Evaluation is monotone under this operation.
    pub fn push_clause(&mut self, clause: Clause) {
        if !clause.is_empty() {
            self.clauses.push(clause);
        }
    }

    /// Removes every condition on `variable`; clauses left empty disappear.
    pub fn strip_variable(&self, variable: &str) -> Operationalization {
        let clauses = self
            .clauses
            .iter()
            .map(|c| Clause(c.0.iter().filter(|a| a.variable != variable).cloned().collect()))
            .collect();
        Operationalization::new(clauses)
    }

    /// Renames variables through `mapping`; unmapped names are kept.
    pub fn rename_variables(&self, mapping: &BTreeMap<String, String>) -> Operationalization {
        let clauses = self
            .clauses
            .iter()
            .map(|c| {
                Clause(
                    c.0.iter()
                        .map(|a| AtomicCondition {
                            variable: mapping.get(&a.variable).cloned().unwrap_or_else(|| a.variable.clone()),
                            ..a.clone()
                        })
                        .collect(),
                )
            })
            .collect();
        Operationalization::new(clauses)
    }

    /// Evaluates against `snapshot`, treating variables outside
    /// `active_vars` the same as lost ones.
    pub fn evaluate<'a, I>(&self, snapshot: &EnvironmentSnapshot, active_vars: I) -> Truth
    where
        I: IntoIterator<Item = &'a str>,
    {
        if self.is_empty() {
            return Truth::Unknown;
        }
        let active: BTreeSet<&str> = active_vars.into_iter().collect();
        let all_known = self
            .variables()
            .into_iter()
            .all(|v| active.contains(v) && snapshot.contains(v));
        if !all_known {
            return Truth::Unknown;
        }
        self.clauses.iter().any(|c| c.holds(snapshot)).into()
    }

    /// Evaluates with every variable present in the snapshot considered active.
    pub fn evaluate_all(&self, snapshot: &EnvironmentSnapshot) -> Truth {
        let vars: Vec<&str> = snapshot.variables().collect();
        self.evaluate(snapshot, vars)
    }

    /// Evaluates on a plain variable→value lookup; `None` when a variable is missing.
    pub fn holds_on(&self, lookup: impl Fn(&str) -> Option<f64>) -> Option<bool> {
        if self.is_empty() {
            return None;
        }
        let mut any = false;
        for clause in &self.clauses {
            let mut all = true;
            for c in &clause.0 {
                let v = lookup(&c.variable)?;
                all &= c.holds(v);
            }
            any |= all;
        }
        Some(any)
    }
}

/// Evaluates `op` on `snapshot` restricted to `active_vars`.
pub fn eval_operationalization<'a>(
    op: &Operationalization,
    snapshot: &EnvironmentSnapshot,
    active_vars: impl IntoIterator<Item = &'a str>,
) -> Truth {
    op.evaluate(snapshot, active_vars)
}

pub fn strip_variable(op: &Operationalization, variable: &str) -> Operationalization {
    op.strip_variable(variable)
}

impl fmt::Display for Operationalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" OR ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Operationalization {
    type Err = ReqModelError;

    /// Parses the exact textual grammar; the empty string is the empty
    /// operationalization.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let clauses = s
            .split(" OR ")
            .map(|clause| {
                let conds = clause.split(" AND ").map(parse_condition).collect::<Result<Vec<_>, _>>()?;
                Clause::new(conds)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { clauses })
    }
}

fn parse_condition(text: &str) -> Result<AtomicCondition, ReqModelError> {
    let err = |reason: &str| ReqModelError::Parse {
        input: text.to_string(),
        reason: reason.to_string(),
    };
    let ident_len = text
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_alphanumeric() && (i > 0 || c.is_ascii_alphabetic())))
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    if ident_len == 0 {
        return Err(err("expected a variable name"));
    }
    let (ident, rest) = text.split_at(ident_len);
    let (op, number) = [
        (">=", CmpOp::Ge),
        ("<=", CmpOp::Le),
        (">", CmpOp::Gt),
        ("<", CmpOp::Lt),
        ("=", CmpOp::Eq),
    ]
    .iter()
    .find_map(|(sym, op)| rest.strip_prefix(sym).map(|n| (*op, n)))
    .ok_or_else(|| err("expected one of >=, <=, >, <, ="))?;
    if !is_decimal(number) {
        return Err(err("expected a decimal number with '.' separator"));
    }
    let threshold: f64 = number.parse().map_err(|_| err("unparseable number"))?;
    AtomicCondition::new(ident, op, threshold)
}

fn is_decimal(s: &str) -> bool {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CTX1: &str = "perclos>=0.15 AND hbpm<=0.60 AND hbpm>=0.56";
    const CTX2: &str = "perclos>=0.21 AND facePosition=1 AND hbpm<=0.55 AND hbpm>=0.46";
    const CTX3: &str = "perclos>0.30 AND facePosition=1 AND hbpm<=0.45 AND hosw<1";
    const ALL: [&str; 4] = ["perclos", "facePosition", "hbpm", "hosw"];

    fn op(s: &str) -> Operationalization {
        s.parse().unwrap()
    }

    fn snap(values: &[(&str, f64)]) -> EnvironmentSnapshot {
        EnvironmentSnapshot::from_values(0, values.iter().copied())
    }

    #[test]
    fn parses_and_prints_the_grammar() {
        let o = op(CTX1);
        assert_eq!(o.clauses().len(), 1);
        assert_eq!(o.to_string(), "perclos>=0.15 AND hbpm<=0.6 AND hbpm>=0.56");
        let two = op("perclos<0.05 AND facePosition=0 OR hosw=0");
        assert_eq!(two.clauses().len(), 2);
        assert_eq!(two.to_string(), "perclos<0.05 AND facePosition=0 OR hosw=0");
        assert!(op("").is_empty());
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in [
            "perclos >= 0.15",
            "perclos>=0,15",
            "perclos=>0.15",
            "1perclos>=0.1",
            "perclos>=.5",
            "perclos>=0.5 and hbpm<=0.6",
            "perclos>=1.5",
            "perclos>=0.5 AND ",
            "hbpm=0.5 AND hbpm=0.6",
            "hbpm>=0.5 AND hbpm>0.6",
        ] {
            assert!(bad.parse::<Operationalization>().is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn eval_examples() {
        let s = snap(&[("perclos", 0.20), ("hbpm", 0.58), ("facePosition", 1.0), ("hosw", 1.0)]);
        assert_eq!(op(CTX1).evaluate(&s, ALL), Truth::True);
        assert_eq!(Operationalization::empty().evaluate(&s, ALL), Truth::Unknown);

        let mut s3 = snap(&[("perclos", 0.4), ("hbpm", 0.4), ("facePosition", 1.0), ("hosw", 0.0)]);
        assert_eq!(op(CTX3).evaluate(&s3, ALL), Truth::True);
        s3.remove("facePosition");
        assert_eq!(op(CTX3).evaluate(&s3, ALL), Truth::Unknown);
    }

    #[test]
    fn inactive_variable_is_unknown() {
        let s = snap(&[("perclos", 0.4), ("hbpm", 0.5), ("facePosition", 1.0), ("hosw", 0.5)]);
        assert_eq!(op(CTX2).evaluate(&s, ALL), Truth::True);
        assert_eq!(op(CTX2).evaluate(&s, ["perclos", "hbpm", "hosw"]), Truth::Unknown);
        assert_eq!(op(CTX2).strip_variable("facePosition").evaluate(&s, ["perclos", "hbpm", "hosw"]), Truth::True);
    }

    #[test]
    fn strip_examples() {
        assert_eq!(
            op(CTX2).strip_variable("facePosition"),
            op("perclos>=0.21 AND hbpm<=0.55 AND hbpm>=0.46")
        );
        assert_eq!(op(CTX1).strip_variable("facePosition"), op(CTX1));
        let single = op("hosw<1");
        let stripped = single.strip_variable("hosw");
        assert_eq!(stripped.clauses().len(), 0);
        assert!(stripped.is_empty());
        let two = op("hosw<1 OR perclos>0.3").strip_variable("hosw");
        assert_eq!(two, op("perclos>0.3"));
    }

    #[test]
    fn equality_tolerance() {
        let o = op("hosw=0.5");
        assert_eq!(o.evaluate(&snap(&[("hosw", 0.5 + 1e-12)]), ["hosw"]), Truth::True);
        assert_eq!(o.evaluate(&snap(&[("hosw", 0.5 + 1e-6)]), ["hosw"]), Truth::False);
    }

    fn arb_condition() -> impl Strategy<Value = AtomicCondition> {
        (
            prop::sample::select(ALL.to_vec()),
            prop::sample::select(vec![CmpOp::Ge, CmpOp::Le, CmpOp::Gt, CmpOp::Lt]),
            0.0f64..=1.0,
        )
            .prop_map(|(v, o, t)| AtomicCondition::new(v, o, t).unwrap())
    }

    fn arb_clause() -> impl Strategy<Value = Clause> {
        prop::collection::vec(arb_condition(), 1..4).prop_filter_map("bounds", |c| Clause::new(c).ok())
    }

    fn arb_op() -> impl Strategy<Value = Operationalization> {
        prop::collection::vec(arb_clause(), 0..4).prop_map(Operationalization::new)
    }

    fn arb_snapshot() -> impl Strategy<Value = EnvironmentSnapshot> {
        prop::collection::vec(0.0f64..=1.0, 4)
            .prop_map(|v| EnvironmentSnapshot::from_values(0, ALL.iter().copied().zip(v)))
    }

    proptest! {
        #[test]
        fn adding_a_clause_never_flips_true_to_false(o in arb_op(), c in arb_clause(), s in arb_snapshot()) {
            let before = o.evaluate(&s, ALL);
            let mut extended = o.clone();
            extended.push_clause(c);
            let after = extended.evaluate(&s, ALL);
            if before == Truth::True {
                prop_assert_eq!(after, Truth::True);
            }
        }

        #[test]
        fn strip_is_idempotent(o in arb_op(), v in prop::sample::select(ALL.to_vec())) {
            let once = o.strip_variable(v);
            prop_assert_eq!(once.strip_variable(v), once.clone());
            prop_assert!(!once.references(v));
        }

        #[test]
        fn text_round_trip(o in arb_op()) {
            let text = o.to_string();
            let back: Operationalization = text.parse().unwrap();
            prop_assert_eq!(back, o);
        }
    }
}
