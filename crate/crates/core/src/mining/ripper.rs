//! Sequential-covering rule learner in the RIPPER family.
//!
//! Rules always predict `active`; anything no rule covers is `inactive`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{AttributeKind, Class, Dataset, Row, Value};
use super::MiningError;

/// Minimum prune-set precision for a grown rule to be kept.
pub const MIN_PRUNE_PRECISION: f64 = 0.5;

const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Test {
    Ge(f64),
    Le(f64),
    Is(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub test: Test,
}

impl Condition {
    pub fn holds(&self, value: &Value, kind: &AttributeKind) -> bool {
        match (&self.test, value, kind) {
            (Test::Ge(t), Value::Numeric(v), _) => v >= t,
            (Test::Le(t), Value::Numeric(v), _) => v <= t,
            (Test::Is(s), Value::Nominal(i), AttributeKind::Nominal(options)) => options.get(*i) == Some(s),
            _ => false,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.test {
            Test::Ge(t) => write!(f, "{}>={t}", self.attribute),
            Test::Le(t) => write!(f, "{}<={t}", self.attribute),
            Test::Is(s) => write!(f, "{}={s}", self.attribute),
        }
    }
}

/// A conjunction predicting `active`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
}

impl Rule {
    /// Conditions on attributes the dataset lacks never hold.
    pub fn covers(&self, ds: &Dataset, row: &Row) -> bool {
        self.conditions.iter().all(|c| match ds.feature_index(&c.attribute) {
            Some(i) => c.holds(&row.values[i], &ds.features()[i].kind),
            None => false,
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.conditions.iter().map(|c| c.to_string()).collect();
        write!(f, "({}) => active", parts.join(" AND "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub default_class: Class,
    /// Learned from a single-class dataset.
    pub degenerate: bool,
}

impl RuleSet {
    pub fn classify(&self, ds: &Dataset, row: &Row) -> Class {
        if self.rules.iter().any(|r| r.covers(ds, row)) {
            Class::Active
        } else {
            self.default_class
        }
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        write!(f, "=> {}", self.default_class)
    }
}

/// Gain of specializing a rule from covering `(p0, n0)` to `(p1, n1)`.
pub fn foil_gain(before: (usize, usize), after: (usize, usize)) -> f64 {
    let (p0, n0) = before;
    let (p1, n1) = after;
    if p1 == 0 || p0 == 0 {
        return 0.0;
    }
    let info = |p: usize, n: usize| (p as f64 / (p + n) as f64).log2();
    p1 as f64 * (info(p1, n1) - info(p0, n0))
}

/// Midpoints between consecutive distinct values of a numeric attribute
/// whose records do not all share one class.
pub fn candidate_thresholds(ds: &Dataset, attribute: &str) -> Result<Vec<f64>, MiningError> {
    let col = numeric_column(ds, attribute)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    Ok(thresholds_over(ds, col, &all))
}

fn numeric_column(ds: &Dataset, attribute: &str) -> Result<usize, MiningError> {
    let col = ds.feature_index(attribute).ok_or_else(|| MiningError::UnknownAttribute {
        name: attribute.to_string(),
    })?;
    match ds.features()[col].kind {
        AttributeKind::Numeric => Ok(col),
        AttributeKind::Nominal(_) => Err(MiningError::NotNumeric {
            name: attribute.to_string(),
        }),
    }
}

fn thresholds_over(ds: &Dataset, col: usize, rows: &[usize]) -> Vec<f64> {
    let mut points: Vec<(f64, bool)> = rows
        .iter()
        .map(|&r| (ds.rows()[r].values[col].as_f64(), ds.rows()[r].class.is_active()))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    // (value, seen active, seen inactive) per distinct value
    let mut groups: Vec<(f64, bool, bool)> = Vec::new();
    for (v, active) in points {
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                g.1 |= active;
                g.2 |= !active;
            }
            _ => groups.push((v, active, !active)),
        }
    }
    let mut out: Vec<f64> = groups
        .windows(2)
        .filter(|w| {
            let pure_same = (w[0].1 != w[0].2) && (w[1].1 != w[1].2) && w[0].1 == w[1].1;
            !pure_same
        })
        .map(|w| (w[0].0 + w[1].0) / 2.0)
        .collect();
    out.dedup();
    out
}

/// Condition bound to a column, used while learning.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Probe {
    Ge(usize, f64),
    Le(usize, f64),
    Is(usize, usize),
}

impl Probe {
    fn holds(self, row: &Row) -> bool {
        match self {
            Probe::Ge(c, t) => row.values[c].as_f64() >= t,
            Probe::Le(c, t) => row.values[c].as_f64() <= t,
            Probe::Is(c, i) => row.values[c] == Value::Nominal(i),
        }
    }
}

struct Learner<'a> {
    ds: &'a Dataset,
}

impl Learner<'_> {
    fn row(&self, i: usize) -> &Row {
        &self.ds.rows()[i]
    }

    fn counts(&self, rows: &[usize]) -> (usize, usize) {
        let p = rows.iter().filter(|&&i| self.row(i).class.is_active()).count();
        (p, rows.len() - p)
    }

    fn covered(&self, probes: &[Probe], rows: &[usize]) -> Vec<usize> {
        rows.iter()
            .copied()
            .filter(|&i| probes.iter().all(|p| p.holds(self.row(i))))
            .collect()
    }

    /// Greedy specialization on `grow`. Thresholds come from `pool`, the
    /// remaining records the rule still covers.
    fn grow(&self, grow: &[usize], pool: &[usize]) -> Vec<Probe> {
        let mut probes = Vec::new();
        let mut grow_cov = grow.to_vec();
        let mut pool_cov = pool.to_vec();
        loop {
            let before = self.counts(&grow_cov);
            if before.1 == 0 || before.0 == 0 {
                break;
            }
            let mut best: Option<(f64, Probe)> = None;
            let mut consider = |gain: f64, probe: Probe| {
                if gain > GAIN_EPSILON && best.is_none_or(|(g, _)| gain > g + GAIN_EPSILON) {
                    best = Some((gain, probe));
                }
            };
            for (col, attr) in self.ds.features().iter().enumerate() {
                match &attr.kind {
                    AttributeKind::Numeric => {
                        let mut sorted: Vec<(f64, bool)> = grow_cov
                            .iter()
                            .map(|&i| (self.row(i).values[col].as_f64(), self.row(i).class.is_active()))
                            .collect();
                        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                        let mut prefix_pos = Vec::with_capacity(sorted.len() + 1);
                        prefix_pos.push(0usize);
                        for (_, active) in &sorted {
                            prefix_pos.push(prefix_pos.last().unwrap() + usize::from(*active));
                        }
                        let total = sorted.len();
                        let total_pos = prefix_pos[total];
                        for t in thresholds_over(self.ds, col, &pool_cov) {
                            // records with value <= t are the first `le` entries
                            let le = sorted.partition_point(|(v, _)| *v <= t);
                            let le_pos = prefix_pos[le];
                            let ge = (total - le, total_pos - le_pos);
                            consider(foil_gain(before, (ge.1, ge.0 - ge.1)), Probe::Ge(col, t));
                            consider(foil_gain(before, (le_pos, le - le_pos)), Probe::Le(col, t));
                        }
                    }
                    AttributeKind::Nominal(options) => {
                        for idx in 0..options.len() {
                            let probe = Probe::Is(col, idx);
                            let after = self.counts(&self.covered(&[probe], &grow_cov));
                            consider(foil_gain(before, after), probe);
                        }
                    }
                }
            }
            let Some((_, probe)) = best else { break };
            probes.push(probe);
            grow_cov.retain(|&i| probe.holds(self.row(i)));
            pool_cov.retain(|&i| probe.holds(self.row(i)));
        }
        probes
    }

    /// A grown and pruned rule, or `None` if nothing was grown or the rule
    /// fails the prune-set precision test.
    fn grow_and_prune(&self, grow: &[usize], prune: &[usize], pool: &[usize]) -> Option<Vec<Probe>> {
        let probes = self.grow(grow, pool);
        if probes.is_empty() {
            return None;
        }
        let probes = self.prune(probes, grow, prune);
        let (pp, pn) = self.counts(&self.covered(&probes, prune));
        if pp + pn > 0 && (pp as f64) / ((pp + pn) as f64) < MIN_PRUNE_PRECISION {
            return None;
        }
        Some(probes)
    }

    /// The rule learned from the grow/prune split. If it covers negatives
    /// among the remaining records, a rule grown on all of them replaces it
    /// when that rule covers none.
    fn next_rule(&self, grow: &[usize], prune: &[usize], remaining: &[usize]) -> Option<Vec<Probe>> {
        let split = self.grow_and_prune(grow, prune, remaining);
        let negatives = |ps: &[Probe]| self.counts(&self.covered(ps, remaining)).1;
        if split.as_deref().is_some_and(|ps| negatives(ps) == 0) {
            return split;
        }
        match self.grow_and_prune(remaining, remaining, remaining) {
            Some(whole) if split.is_none() || negatives(&whole) == 0 => Some(whole),
            _ => split,
        }
    }

    /// Deletes final conditions while that strictly improves the prune-set
    /// value `(p - n) / (p + n)` without covering more grow-set negatives.
    /// Ties keep the longer rule.
    fn prune(&self, mut probes: Vec<Probe>, grow: &[usize], prune: &[usize]) -> Vec<Probe> {
        let value = |ps: &[Probe]| {
            let (p, n) = self.counts(&self.covered(ps, prune));
            if p + n == 0 {
                0.0
            } else {
                (p as f64 - n as f64) / (p + n) as f64
            }
        };
        let grow_negatives = |ps: &[Probe]| self.counts(&self.covered(ps, grow)).1;
        while probes.len() > 1 {
            let shorter = &probes[..probes.len() - 1];
            if value(shorter) <= value(&probes) || grow_negatives(shorter) > grow_negatives(&probes) {
                break;
            }
            probes.pop();
        }
        probes
    }

    /// Stratified 2:1 grow/prune split of `rows`. Within each class, records
    /// keep their order and every third one, from a seeded offset, goes to
    /// the prune set, so a short run of similar records never lands there
    /// entirely.
    fn split(&self, rows: &[usize], rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
        let mut grow = Vec::new();
        let mut prune = Vec::new();
        for class in [Class::Active, Class::Inactive] {
            let offset: usize = rng.random_range(0..3);
            let members = rows.iter().copied().filter(|&i| self.row(i).class == class);
            for (rank, i) in members.enumerate() {
                if (rank + offset) % 3 == 2 {
                    prune.push(i);
                } else {
                    grow.push(i);
                }
            }
        }
        if !grow.iter().any(|&i| self.row(i).class.is_active()) {
            // too few positives left to hold any out
            return (rows.to_vec(), rows.to_vec());
        }
        grow.sort_unstable();
        prune.sort_unstable();
        (grow, prune)
    }

    fn to_rule(&self, probes: &[Probe]) -> Rule {
        let features = self.ds.features();
        let mut conditions: Vec<Condition> = Vec::new();
        for &probe in probes {
            let (col, test) = match probe {
                Probe::Ge(c, t) => (c, Test::Ge(t)),
                Probe::Le(c, t) => (c, Test::Le(t)),
                Probe::Is(c, i) => match &features[c].kind {
                    AttributeKind::Nominal(options) => (c, Test::Is(options[i].clone())),
                    AttributeKind::Numeric => unreachable!("nominal probe on numeric column"),
                },
            };
            let attribute = &features[col].name;
            let same_direction = conditions.iter_mut().find(|c| {
                &c.attribute == attribute
                    && matches!(
                        (&c.test, &test),
                        (Test::Ge(_), Test::Ge(_)) | (Test::Le(_), Test::Le(_)) | (Test::Is(_), Test::Is(_))
                    )
            });
            match same_direction {
                // later bounds on a column are always tighter
                Some(existing) => existing.test = test,
                None => conditions.push(Condition {
                    attribute: attribute.clone(),
                    test,
                }),
            }
        }
        Rule { conditions }
    }
}

pub fn learn_ruleset(ds: &Dataset, seed: u64) -> RuleSet {
    let (pos, neg) = ds.class_counts();
    if pos == 0 || neg == 0 {
        return RuleSet {
            rules: Vec::new(),
            default_class: if pos > 0 { Class::Active } else { Class::Inactive },
            degenerate: true,
        };
    }

    let learner = Learner { ds };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: Vec<usize> = (0..ds.len()).collect();
    let mut rules = Vec::new();

    loop {
        let (p, _) = learner.counts(&remaining);
        if p == 0 {
            break;
        }
        let (grow, prune) = learner.split(&remaining, &mut rng);
        let Some(probes) = learner.next_rule(&grow, &prune, &remaining) else {
            break;
        };
        remaining.retain(|&i| !probes.iter().all(|pr| pr.holds(learner.row(i))));
        rules.push(learner.to_rule(&probes));
    }

    RuleSet {
        rules,
        default_class: Class::Inactive,
        degenerate: false,
    }
}
