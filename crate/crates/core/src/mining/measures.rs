use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Precision, recall and f-measure for the `active` class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMeasures {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl EvalMeasures {
    pub fn perfect() -> Self {
        Self {
            precision: 1.0,
            recall: 1.0,
            f_measure: 1.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.precision.min(self.recall).min(self.f_measure)
    }
}

/// Binary confusion counts with `active` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, actual_active: bool, predicted_active: bool) {
        match (actual_active, predicted_active) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn measures(&self) -> EvalMeasures {
        confusion_measures(self.tp, self.fp, self.fn_)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
        self.tn += rhs.tn;
    }
}

/// Empty denominators give 0.
pub fn confusion_measures(tp: usize, fp: usize, fn_: usize) -> EvalMeasures {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EvalMeasures {
        precision,
        recall,
        f_measure,
    }
}
