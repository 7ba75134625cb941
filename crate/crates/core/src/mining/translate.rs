use crate::reqmodel::{AtomicCondition, Clause, CmpOp, Operationalization};

use super::ripper::{RuleSet, Test};
use super::MiningError;

/// One clause per rule, in rule order. Fails on nominal conditions or
/// thresholds outside the normalized range.
pub fn ruleset_to_operationalization(rs: &RuleSet) -> Result<Operationalization, MiningError> {
    let mut op = Operationalization::empty();
    for rule in &rs.rules {
        let mut conditions = Vec::with_capacity(rule.conditions.len());
        for c in &rule.conditions {
            let (cmp, threshold) = match c.test {
                Test::Ge(t) => (CmpOp::Ge, t),
                Test::Le(t) => (CmpOp::Le, t),
                Test::Is(ref v) => {
                    return Err(MiningError::Untranslatable {
                        reason: format!("nominal condition {}={v}", c.attribute),
                    })
                }
            };
            let atom = AtomicCondition::new(c.attribute.clone(), cmp, threshold)
                .map_err(|e| MiningError::Untranslatable { reason: e.to_string() })?;
            conditions.push(atom);
        }
        let clause = Clause::new(conditions).map_err(|e| MiningError::Untranslatable { reason: e.to_string() })?;
        op.push_clause(clause);
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::dataset::Class;
    use crate::mining::ripper::{Condition, Rule};

    fn cond(attribute: &str, test: Test) -> Condition {
        Condition {
            attribute: attribute.into(),
            test,
        }
    }

    fn rules(rules: Vec<Vec<Condition>>) -> RuleSet {
        RuleSet {
            rules: rules.into_iter().map(|conditions| Rule { conditions }).collect(),
            default_class: Class::Inactive,
            degenerate: false,
        }
    }

    #[test]
    fn single_rule_single_clause() {
        let rs = rules(vec![vec![cond("perclos", Test::Ge(0.15)), cond("hbpm", Test::Le(0.6))]]);
        let op = ruleset_to_operationalization(&rs).unwrap();
        assert_eq!(op.to_string(), "perclos>=0.15 AND hbpm<=0.6");
    }

    #[test]
    fn two_rules_two_clauses() {
        let rs = rules(vec![
            vec![cond("perclos", Test::Ge(0.3))],
            vec![cond("perclos", Test::Le(0.05)), cond("facePosition", Test::Le(0.5))],
        ]);
        let op = ruleset_to_operationalization(&rs).unwrap();
        assert_eq!(op.clauses().len(), 2);
        assert_eq!(op.to_string(), "perclos>=0.3 OR perclos<=0.05 AND facePosition<=0.5");
    }

    #[test]
    fn empty_and_nominal() {
        assert!(ruleset_to_operationalization(&rules(vec![])).unwrap().is_empty());
        let nominal = rules(vec![vec![cond("mode", Test::Is("a".into()))]]);
        assert!(matches!(
            ruleset_to_operationalization(&nominal),
            Err(MiningError::Untranslatable { .. })
        ));
    }
}
