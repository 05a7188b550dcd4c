use serde::{Deserialize, Serialize};

use crate::signal::FaultClass;

/// Outcome of a per-class scoring classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub class: FaultClass,
    /// One score per model, in class ordinal order.
    pub scores: Vec<(FaultClass, f64)>,
}

impl Decision {
    /// Highest score wins; `scores` must be ordered by class ordinal so the
    /// lowest ordinal wins ties. Panics on empty input.
    pub(crate) fn highest(scores: Vec<(FaultClass, f64)>) -> Self {
        let values: Vec<f64> = scores.iter().map(|s| s.1).collect();
        let class = scores[crate::math::argmax(&values)].0;
        Self { class, scores }
    }

    pub(crate) fn lowest(scores: Vec<(FaultClass, f64)>) -> Self {
        let values: Vec<f64> = scores.iter().map(|s| -s.1).collect();
        let class = scores[crate::math::argmax(&values)].0;
        Self { class, scores }
    }

    pub fn score(&self, class: FaultClass) -> Option<f64> {
        self.scores.iter().find(|s| s.0 == class).map(|s| s.1)
    }
}
