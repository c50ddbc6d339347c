use std::collections::BTreeMap;

use crate::aggregate::pairwise_sum;
use crate::backend::{Language, Translator, SOURCE_LANGUAGE};

use super::{AugmentError, AugmentationType, Prompt};

/// Pivot-language candidates per direction.
pub const DEFAULT_FAN_OUT: usize = 8;
/// Back-translations kept per pivot language.
pub const DEFAULT_KEEP: usize = 4;

/// One source → pivot → source path.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    pub pivot_text: String,
    pub text: String,
    pub forward_log_score: f64,
    pub backward_log_score: f64,
}

impl RoundTrip {
    /// Probability of the whole round trip.
    pub fn score(&self) -> f64 {
        (self.forward_log_score + self.backward_log_score).exp()
    }
}

/// Translates into `pivot` and back, `fan_out` candidates per direction.
///
/// Up to `fan_out²` paths; blank translations are discarded.
pub fn round_trip_candidates(
    text: &str,
    pivot: Language,
    translator: &dyn Translator,
    fan_out: usize,
) -> Result<Vec<RoundTrip>, AugmentError> {
    let fail = |source| AugmentError::Translation { pivot, source };
    let forward = translator.translate(text, SOURCE_LANGUAGE, pivot, fan_out).map_err(fail)?;
    let mut out = Vec::with_capacity(fan_out * fan_out);
    for f in forward.iter().take(fan_out).filter(|f| !f.text.trim().is_empty()) {
        let backward = translator.translate(&f.text, pivot, SOURCE_LANGUAGE, fan_out).map_err(fail)?;
        for b in backward.iter().take(fan_out) {
            let back = b.text.trim();
            if back.is_empty() {
                continue;
            }
            out.push(RoundTrip {
                pivot_text: f.text.clone(),
                text: back.to_string(),
                forward_log_score: f.log_score,
                backward_log_score: b.log_score,
            });
        }
    }
    Ok(out)
}

/// Sums the round-trip probability of identical strings; best first, ties by text.
pub fn merge_round_trips(raw: &[RoundTrip]) -> Vec<(String, f64)> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in raw {
        groups.entry(r.text.as_str()).or_default().push(r.score());
    }
    let mut merged: Vec<(String, f64)> = groups
        .into_iter()
        .map(|(text, mut scores)| {
            scores.sort_by(f64::total_cmp);
            (text.to_string(), pairwise_sum(&scores))
        })
        .collect();
    merged.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    merged
}

/// Top `keep` distinct back-translations of `original` through `pivot`.
///
/// The original text itself may be among them if it scores high enough.
pub fn back_translate(
    original: &Prompt,
    pivot: Language,
    translator: &dyn Translator,
    fan_out: usize,
    keep: usize,
) -> Result<Vec<Prompt>, AugmentError> {
    let tag = AugmentationType::back_translation(pivot)
        .ok_or_else(|| AugmentError::Resource(format!("{pivot} is not a pivot language")))?;
    if fan_out == 0 || keep == 0 {
        return Err(AugmentError::Resource("fan_out and keep must be at least 1".into()));
    }
    let raw = round_trip_candidates(&original.text, pivot, translator, fan_out)?;
    Ok(merge_round_trips(&raw)
        .into_iter()
        .take(keep)
        .enumerate()
        .map(|(rank, (text, _))| original.variant(text, tag, rank))
        .collect())
}
