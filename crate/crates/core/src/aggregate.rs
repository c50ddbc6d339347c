//! Merge per-prompt beam candidates into one prediction.
//!
//! Candidates are keyed by their normalized text. The sum strategy scores a
//! candidate by the total probability it received across all prompts; the
//! count strategy by the number of beam slots it occupied. Confidence is the
//! winner's share of the total score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Generation;

/// Relative window inside which two scores count as tied at the argmax.
///
/// Probabilities arrive as log-scores, so two answers with equal probability
/// mass can differ in the last ulp after exponentiation and summation.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("no candidates: every prompt produced an empty generation list")]
    NoCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Sum,
    Count,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Sum => "sum",
            Strategy::Count => "count",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Strategy::Sum),
            "count" => Ok(Strategy::Count),
            other => Err(format!("unknown strategy {other:?}, expected sum or count")),
        }
    }
}

/// Trim, collapse internal whitespace, and optionally lowercase.
pub fn normalize_answer(text: &str, case_insensitive: bool) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if case_insensitive {
        collapsed.to_lowercase()
    } else {
        collapsed
    }
}

/// Decides which answer strings are "identical".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnswerNormalizer {
    pub case_insensitive: bool,
}

impl AnswerNormalizer {
    pub fn new(case_insensitive: bool) -> Self {
        AnswerNormalizer { case_insensitive }
    }

    pub fn normalize(&self, text: &str) -> String {
        normalize_answer(text, self.case_insensitive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    /// Normalized answer text.
    pub text: String,
    pub score: f64,
    /// Number of distinct prompts whose beam contained this answer.
    pub supporting_prompts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    /// Best first. `ranked[0]` is the final prediction.
    pub ranked: Vec<CandidateScore>,
    pub confidence: f64,
    pub strategy: Strategy,
    /// Number of prompts aggregated.
    pub k: usize,
}

impl AggregationResult {
    pub fn final_candidate(&self) -> &CandidateScore {
        &self.ranked[0]
    }

    pub fn final_text(&self) -> &str {
        &self.final_candidate().text
    }
}

/// Sum of probabilities of identical answers across all prompts.
pub fn aggregate_sum(
    per_prompt: &[Vec<Generation>],
    normalizer: &AnswerNormalizer,
) -> Result<AggregationResult, AggregateError> {
    aggregate(Strategy::Sum, per_prompt, normalizer)
}

/// Number of beam slots each answer occupies across all prompts.
pub fn aggregate_count(
    per_prompt: &[Vec<Generation>],
    normalizer: &AnswerNormalizer,
) -> Result<AggregationResult, AggregateError> {
    aggregate(Strategy::Count, per_prompt, normalizer)
}

pub fn aggregate(
    strategy: Strategy,
    per_prompt: &[Vec<Generation>],
    normalizer: &AnswerNormalizer,
) -> Result<AggregationResult, AggregateError> {
    #[derive(Default)]
    struct Acc {
        contributions: Vec<f64>,
        prompts: BTreeSet<usize>,
    }

    let mut merged: BTreeMap<String, Acc> = BTreeMap::new();
    for (i, generations) in per_prompt.iter().enumerate() {
        for g in generations {
            let acc = merged.entry(normalizer.normalize(&g.text)).or_default();
            acc.contributions.push(match strategy {
                Strategy::Sum => g.probability(),
                Strategy::Count => 1.0,
            });
            acc.prompts.insert(i);
        }
    }
    if merged.is_empty() {
        return Err(AggregateError::NoCandidates);
    }

    let mut ranked: Vec<CandidateScore> = merged
        .into_iter()
        .map(|(text, mut acc)| {
            acc.contributions.sort_by(f64::total_cmp);
            CandidateScore { text, score: pairwise_sum(&acc.contributions), supporting_prompts: acc.prompts.len() }
        })
        .collect();
    // Sum in text order before re-sorting so the total does not depend on ranking.
    let total = pairwise_sum(&ranked.iter().map(|c| c.score).collect::<Vec<_>>());

    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
    let top = ranked[0].score;
    let winner = ranked
        .iter()
        .enumerate()
        .take_while(|(_, c)| c.score >= top * (1.0 - TIE_TOLERANCE))
        .min_by(|(_, a), (_, b)| a.text.cmp(&b.text))
        .map(|(i, _)| i)
        .unwrap_or(0);
    ranked[..=winner].rotate_right(1);

    let confidence = ranked[0].score / total;
    Ok(AggregationResult { ranked, confidence, strategy, k: per_prompt.len() })
}

/// Winner's share of the total score.
pub fn confidence_of(result: &AggregationResult) -> f64 {
    let total = pairwise_sum(&sorted_by_text(&result.ranked));
    result.ranked[0].score / total
}

fn sorted_by_text(ranked: &[CandidateScore]) -> Vec<f64> {
    let mut by_text: Vec<&CandidateScore> = ranked.iter().collect();
    by_text.sort_by(|a, b| a.text.cmp(&b.text));
    by_text.into_iter().map(|c| c.score).collect()
}

/// Pairwise (cascade) summation with a fixed split order.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}
