use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregate::{aggregate, Strategy};
use crate::backend::Generation;
use crate::dataset::FactKey;

use super::{baseline_prediction, relative_effect, EvaluateError, RelativeEffect, Scoring};

/// Largest prompt count the augmenter can produce per fact.
pub const MAX_K: usize = 30;

/// Everything the curve needs for one fact: per-prompt beams, original prompt first.
#[derive(Debug, Clone, PartialEq)]
pub struct FactProbe {
    pub key: FactKey,
    pub gold: String,
    pub aliases: Vec<String>,
    pub generations: Vec<Vec<Generation>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
    pub effects: Vec<RelativeEffect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCurve {
    pub strategy: Strategy,
    pub iterations: usize,
    pub seed: u64,
    pub points: Vec<KPoint>,
}

fn rng_for(seed: u64, k: usize, iteration: usize, fact: &FactKey) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((k as u64).to_le_bytes());
    hasher.update((iteration as u64).to_le_bytes());
    hasher.update(fact.subject.as_bytes());
    hasher.update([0]);
    hasher.update(fact.relation_id.as_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Prompt indices used for `fact` at size `k`: the original (index 0) plus
/// `k - 1` augmented prompts drawn without replacement, ascending.
pub fn subset_indices(seed: u64, k: usize, iteration: usize, fact: &FactKey, pool: usize) -> Vec<usize> {
    assert!(k >= 1 && k <= pool, "k={k} outside 1..={pool}");
    let mut rng = rng_for(seed, k, iteration, fact);
    let mut indices: Vec<usize> =
        rand::seq::index::sample(&mut rng, pool - 1, k - 1).into_iter().map(|i| i + 1).collect();
    indices.sort_unstable();
    indices.insert(0, 0);
    indices
}

/// Final answer over the prompts at `indices`; `[0]` alone is the single-prompt baseline.
pub fn predict_subset(
    probe: &FactProbe,
    indices: &[usize],
    strategy: Strategy,
    scoring: &Scoring,
) -> Option<(String, f64)> {
    let normalizer = scoring.normalizer();
    if indices == [0] {
        return baseline_prediction(&probe.generations[0], &normalizer);
    }
    let chosen: Vec<Vec<Generation>> = indices.iter().map(|&i| probe.generations[i].clone()).collect();
    let result = aggregate(strategy, &chosen, &normalizer).ok()?;
    Some((result.final_text().to_string(), result.confidence))
}

fn is_correct(probe: &FactProbe, prediction: Option<(String, f64)>, scoring: &Scoring) -> bool {
    prediction.is_some_and(|(text, _)| scoring.is_correct(&text, &probe.gold, &probe.aliases))
}

pub fn validate_k_values(k_values: &[usize]) -> Result<(), EvaluateError> {
    if k_values.is_empty() {
        return Err(EvaluateError::InvalidK("no values given".into()));
    }
    if let Some(k) = k_values.iter().find(|&&k| k == 0 || k > MAX_K) {
        return Err(EvaluateError::InvalidK(format!("{k} is outside 1..={MAX_K}")));
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvaluateError::InvalidK(format!("{k_values:?} is not strictly increasing")));
    }
    Ok(())
}

/// Relative effect of aggregating `K` prompts against the original prompt alone.
///
/// Each iteration draws one subset per fact and pools correct counts over all
/// facts. A fact with no candidates counts as incorrect.
pub fn k_subset_experiment(
    probes: &[FactProbe],
    k_values: &[usize],
    iterations: usize,
    seed: u64,
    strategy: Strategy,
    scoring: &Scoring,
) -> Result<KCurve, EvaluateError> {
    validate_k_values(k_values)?;
    if iterations == 0 {
        return Err(EvaluateError::NoIterations);
    }
    let max_k = *k_values.last().expect("validated non-empty");
    if let Some(p) = probes.iter().find(|p| p.generations.len() < max_k) {
        return Err(EvaluateError::NotEnoughPrompts { fact: p.key.clone(), k: max_k, available: p.generations.len() });
    }

    let baseline =
        probes.iter().filter(|p| is_correct(p, predict_subset(p, &[0], strategy, scoring), scoring)).count() as u64;

    let mut points = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let effects: Vec<RelativeEffect> = (0..iterations)
            .map(|it| {
                let correct = probes
                    .iter()
                    .filter(|p| {
                        let indices = subset_indices(seed, k, it, &p.key, p.generations.len());
                        is_correct(p, predict_subset(p, &indices, strategy, scoring), scoring)
                    })
                    .count() as u64;
                relative_effect(correct, baseline)
            })
            .collect();
        // The baseline is shared by every iteration, so the mean is one division of integers.
        let numerator: u64 = effects.iter().map(|e| e.correct_with + 1).sum();
        let mean = numerator as f64 / (iterations as u64 * (baseline + 1)) as f64;
        let stderr = if iterations > 1 {
            let ss: f64 = effects.iter().map(|e| (e.value - mean).powi(2)).sum();
            (ss / (iterations - 1) as f64).sqrt() / (iterations as f64).sqrt()
        } else {
            0.0
        };
        points.push(KPoint { k, mean, stderr, effects });
    }
    Ok(KCurve { strategy, iterations, seed, points })
}
