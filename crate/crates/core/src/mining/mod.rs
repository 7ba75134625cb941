//! Datasets, ARFF persistence, the rule learner and its evaluation.

mod arff;
mod cv;
mod dataset;
mod measures;
mod ripper;
mod translate;

pub use arff::{arff_read, arff_read_file, arff_to_string, arff_write, arff_write_file};
pub use cv::{cross_validate, cross_validate_counts, stratified_folds, DEFAULT_FOLDS};
pub use dataset::{Attribute, AttributeKind, Class, Dataset, Row, Value};
pub use measures::{confusion_measures, ConfusionCounts, EvalMeasures};
pub use ripper::{candidate_thresholds, foil_gain, learn_ruleset, Condition, Rule, RuleSet, Test, MIN_PRUNE_PRECISION};
pub use translate::ruleset_to_operationalization;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: unknown attribute kind `{kind}`")]
    UnknownAttributeKind { line: usize, kind: String },
    #[error("{}expected {expected} values, found {found}", line_prefix(*line))]
    Arity {
        line: Option<usize>,
        expected: usize,
        found: usize,
    },
    #[error("{}bad value `{value}` for attribute `{attribute}`", line_prefix(*line))]
    BadValue {
        line: Option<usize>,
        attribute: String,
        value: String,
    },
    #[error("unknown attribute `{name}`")]
    UnknownAttribute { name: String },
    #[error("attribute `{name}` is not numeric")]
    NotNumeric { name: String },
    #[error("{records} records cannot fill {k} folds")]
    TooFewRecords { records: usize, k: usize },
    #[error("cross-validation needs at least 2 folds, got {k}")]
    InvalidFolds { k: usize },
    #[error("rule cannot become an operationalization: {reason}")]
    Untranslatable { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl MiningError {
    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            MiningError::Arity { expected, found, .. } => MiningError::Arity {
                line: Some(line),
                expected,
                found,
            },
            MiningError::BadValue { attribute, value, .. } => MiningError::BadValue {
                line: Some(line),
                attribute,
                value,
            },
            other => other,
        }
    }
}
