//! Scoring, relative effect, the prompt-count curve, and calibration bins.

mod calibration;
mod kcurve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{normalize_answer, AnswerNormalizer, Strategy};
use crate::backend::Generation;
use crate::dataset::FactKey;

pub use calibration::{bin_index, calibration_table, CalibrationBin, NUM_BINS};
pub use kcurve::{
    k_subset_experiment, predict_subset, subset_indices, validate_k_values, FactProbe, KCurve, KPoint, MAX_K,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluateError {
    #[error("confidence {0} is outside (0, 1]")]
    Confidence(f64),
    #[error("K={k} needs {k} prompts but fact {fact} has {available}")]
    NotEnoughPrompts { fact: FactKey, k: usize, available: usize },
    #[error("invalid K values: {0}")]
    InvalidK(String),
    #[error("iterations must be at least 1")]
    NoIterations,
}

/// How predictions are compared with gold objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Scoring {
    pub case_insensitive: bool,
    pub accept_aliases: bool,
}

impl Scoring {
    pub fn normalizer(&self) -> AnswerNormalizer {
        AnswerNormalizer::new(self.case_insensitive)
    }

    pub fn is_correct(&self, prediction: &str, gold: &str, aliases: &[String]) -> bool {
        let aliases: &[String] = if self.accept_aliases { aliases } else { &[] };
        exact_match(prediction, gold, self.case_insensitive, aliases)
    }
}

/// Exact match after answer normalization, against the gold object or any alias given.
pub fn exact_match(prediction: &str, gold: &str, case_insensitive: bool, aliases: &[String]) -> bool {
    let p = normalize_answer(prediction, case_insensitive);
    p == normalize_answer(gold, case_insensitive) || aliases.iter().any(|a| p == normalize_answer(a, case_insensitive))
}

/// Add-one smoothed ratio of correct counts with and without augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeEffect {
    pub value: f64,
    pub correct_with: u64,
    pub correct_without: u64,
}

pub fn relative_effect(correct_with_tta: u64, correct_without_tta: u64) -> RelativeEffect {
    RelativeEffect {
        value: (correct_with_tta as f64 + 1.0) / (correct_without_tta as f64 + 1.0),
        correct_with: correct_with_tta,
        correct_without: correct_without_tta,
    }
}

/// Outcome for one fact under one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub fact: FactKey,
    pub final_text: String,
    pub confidence: f64,
    pub correct: bool,
    pub k: usize,
    pub strategy: Strategy,
}

/// Top beam candidate's share of the beam's total probability.
pub fn baseline_confidence(generations: &[Generation]) -> f64 {
    let probs: Vec<f64> = generations.iter().map(Generation::probability).collect();
    let top = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sorted = probs.clone();
    sorted.sort_by(f64::total_cmp);
    top / crate::aggregate::pairwise_sum(&sorted)
}

/// Single-prompt prediction: the highest-scoring beam candidate, ties by normalized text.
pub fn baseline_prediction(generations: &[Generation], normalizer: &AnswerNormalizer) -> Option<(String, f64)> {
    let best = generations.iter().map(|g| g.log_score).fold(f64::NEG_INFINITY, f64::max);
    let text = generations.iter().filter(|g| g.log_score == best).map(|g| normalizer.normalize(&g.text)).min()?;
    Some((text, baseline_confidence(generations)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(text: &str, p: f64) -> Generation {
        Generation::from_probability(text, p).unwrap()
    }

    #[test]
    fn exact_match_examples() {
        assert!(exact_match("africa", "Africa", true, &[]));
        assert!(exact_match("Africa", "Africa", false, &[]));
        assert!(!exact_match("Erlangen, Germany", "Heidelberg", false, &[]));
        assert!(!exact_match("africa", "Africa", false, &[]));
        assert!(exact_match("NYC", "New York City", false, &["NYC".into()]));
    }

    #[test]
    fn aliases_need_opt_in() {
        let aliases = vec!["NYC".to_string()];
        assert!(!Scoring::default().is_correct("NYC", "New York City", &aliases));
        assert!(Scoring { accept_aliases: true, ..Default::default() }.is_correct("NYC", "New York City", &aliases));
    }

    #[test]
    fn relative_effect_examples() {
        assert_eq!(relative_effect(0, 0).value, 1.0);
        assert_eq!(relative_effect(99, 49).value, 2.0);
        assert_eq!(relative_effect(49, 99).value, 0.5);
    }

    #[test]
    fn baseline_confidence_examples() {
        assert!((baseline_confidence(&[g("a", 0.6), g("b", 0.2)]) - 0.75).abs() < 1e-12);
        assert_eq!(baseline_confidence(&[g("a", 0.3)]), 1.0);
        let uniform: Vec<_> = (0..10).map(|i| g(&format!("c{i}"), 0.05)).collect();
        assert!((baseline_confidence(&uniform) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn baseline_prediction_breaks_ties_by_text() {
        let n = AnswerNormalizer::default();
        assert_eq!(baseline_prediction(&[g("b", 0.4), g("a", 0.4)], &n).unwrap().0, "a");
        assert_eq!(baseline_prediction(&[g("b", 0.5), g("a", 0.4)], &n).unwrap().0, "b");
        assert!(baseline_prediction(&[], &n).is_none());
    }

    proptest! {
        #[test]
        fn relative_effect_monotonicity(a in 0u64..100_000, b in 0u64..100_000) {
            prop_assert_eq!(relative_effect(a, a).value, 1.0);
            prop_assert!(relative_effect(a + 1, b).value > relative_effect(a, b).value);
            prop_assert!(relative_effect(a, b + 1).value < relative_effect(a, b).value);
        }
    }
}
