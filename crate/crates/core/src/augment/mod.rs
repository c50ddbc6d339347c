//! Paraphrase generation for a single prompt.
//!
//! Three families of augmentation produce the prompt set that is sent to the
//! model: single-word synonym swaps (from a thesaurus or from word-embedding
//! neighbours), round-trip translation through five pivot languages, and
//! stopword removal. With default quotas one original prompt becomes 30.

mod back_translation;
mod embedding;
mod stopwords;
mod synonym;
mod tokenize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, Language, Translator};
use crate::dataset::FactKey;

pub use back_translation::{
    back_translate, merge_round_trips, round_trip_candidates, RoundTrip, DEFAULT_FAN_OUT, DEFAULT_KEEP,
};
pub use embedding::{embedding_synonym_variants, EmbeddingTable};
pub use stopwords::{stopword_filter, strip_diacritics, StopwordSet};
pub use synonym::{synonym_variants, SynonymLexicon};
pub use tokenize::WordMask;

/// Per-method ceiling on variants for the multi-variant methods.
pub const MAX_VARIANTS_PER_METHOD: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("back-translation via {pivot} failed: {source}")]
    Translation {
        pivot: Language,
        #[source]
        source: BackendError,
    },
    #[error("prompt fully filtered")]
    FullyFiltered,
    #[error("stopword set is empty")]
    EmptyStopwords,
    #[error("augmentation resource: {0}")]
    Resource(String),
}

impl AugmentError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, AugmentError::Translation { source, .. } if source.is_retryable())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationType {
    Original,
    SynonymLexicon,
    SynonymEmbedding,
    BtFr,
    BtRu,
    BtDe,
    BtEs,
    BtJa,
    StopwordFilter,
}

impl AugmentationType {
    pub const ALL: [AugmentationType; 9] = [
        AugmentationType::Original,
        AugmentationType::SynonymLexicon,
        AugmentationType::SynonymEmbedding,
        AugmentationType::BtFr,
        AugmentationType::BtRu,
        AugmentationType::BtDe,
        AugmentationType::BtEs,
        AugmentationType::BtJa,
        AugmentationType::StopwordFilter,
    ];

    pub const PIVOTS: [Language; 5] = [Language::Fr, Language::Ru, Language::De, Language::Es, Language::Ja];

    pub fn back_translation(pivot: Language) -> Option<Self> {
        Some(match pivot {
            Language::Fr => AugmentationType::BtFr,
            Language::Ru => AugmentationType::BtRu,
            Language::De => AugmentationType::BtDe,
            Language::Es => AugmentationType::BtEs,
            Language::Ja => AugmentationType::BtJa,
            Language::En => return None,
        })
    }

    pub fn pivot(self) -> Option<Language> {
        Some(match self {
            AugmentationType::BtFr => Language::Fr,
            AugmentationType::BtRu => Language::Ru,
            AugmentationType::BtDe => Language::De,
            AugmentationType::BtEs => Language::Es,
            AugmentationType::BtJa => Language::Ja,
            _ => return None,
        })
    }

    /// Methods that may contribute several variants per prompt.
    pub fn is_multi_variant(self) -> bool {
        !matches!(self, AugmentationType::Original | AugmentationType::StopwordFilter)
    }

    pub fn max_variants(self) -> usize {
        if self.is_multi_variant() {
            MAX_VARIANTS_PER_METHOD
        } else {
            1
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentationType::Original => "original",
            AugmentationType::SynonymLexicon => "synonym_lexicon",
            AugmentationType::SynonymEmbedding => "synonym_embedding",
            AugmentationType::BtFr => "bt_fr",
            AugmentationType::BtRu => "bt_ru",
            AugmentationType::BtDe => "bt_de",
            AugmentationType::BtEs => "bt_es",
            AugmentationType::BtJa => "bt_ja",
            AugmentationType::StopwordFilter => "stopword_filter",
        }
    }
}

impl fmt::Display for AugmentationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One probe string and where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub augmentation: AugmentationType,
    pub origin: FactKey,
    /// Position among the variants of the same method.
    pub rank: usize,
}

impl Prompt {
    pub fn original(text: impl Into<String>, origin: FactKey) -> Self {
        Prompt { text: text.into(), augmentation: AugmentationType::Original, origin, rank: 0 }
    }

    pub(crate) fn variant(&self, text: String, augmentation: AugmentationType, rank: usize) -> Prompt {
        Prompt { text, augmentation, origin: self.origin.clone(), rank }
    }
}

/// How many variants each method may contribute. Zero disables a method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quotas {
    pub synonym_lexicon: usize,
    pub synonym_embedding: usize,
    pub bt_fr: usize,
    pub bt_ru: usize,
    pub bt_de: usize,
    pub bt_es: usize,
    pub bt_ja: usize,
    pub stopword_filter: usize,
}

impl Default for Quotas {
    fn default() -> Self {
        Quotas {
            synonym_lexicon: 4,
            synonym_embedding: 4,
            bt_fr: 4,
            bt_ru: 4,
            bt_de: 4,
            bt_es: 4,
            bt_ja: 4,
            stopword_filter: 1,
        }
    }
}

impl Quotas {
    pub fn get(&self, method: AugmentationType) -> usize {
        match method {
            AugmentationType::Original => 1,
            AugmentationType::SynonymLexicon => self.synonym_lexicon,
            AugmentationType::SynonymEmbedding => self.synonym_embedding,
            AugmentationType::BtFr => self.bt_fr,
            AugmentationType::BtRu => self.bt_ru,
            AugmentationType::BtDe => self.bt_de,
            AugmentationType::BtEs => self.bt_es,
            AugmentationType::BtJa => self.bt_ja,
            AugmentationType::StopwordFilter => self.stopword_filter,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for method in AugmentationType::ALL.into_iter().skip(1) {
            let q = self.get(method);
            if q > method.max_variants() {
                return Err(format!("quota for {method} is {q}, at most {} allowed", method.max_variants()));
            }
        }
        Ok(())
    }

    /// Prompt count when every method fills its quota, original included.
    pub fn full_budget(&self) -> usize {
        AugmentationType::ALL.iter().map(|m| self.get(*m)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub quotas: Quotas,
    /// Candidates per translation direction.
    pub fan_out: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { quotas: Quotas::default(), fan_out: DEFAULT_FAN_OUT }
    }
}

/// Everything the augmenter reads. All of it is shared read-only.
#[derive(Clone, Copy)]
pub struct AugmentResources<'a> {
    pub lexicon: &'a SynonymLexicon,
    pub embeddings: &'a EmbeddingTable,
    pub translator: Option<&'a dyn Translator>,
    pub stopwords: &'a StopwordSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentWarning {
    pub method: AugmentationType,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub method: AugmentationType,
    pub quota: usize,
    pub produced: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Augmentation {
    /// Original first, then methods in [`AugmentationType::ALL`] order.
    pub prompts: Vec<Prompt>,
    pub warnings: Vec<AugmentWarning>,
    pub shortfalls: Vec<Shortfall>,
}

/// Runs every enabled method against `original`.
///
/// A variant may repeat the original text; it is kept under its own tag. A
/// method failure never aborts the whole prompt set: it costs that method
/// its variants and leaves a warning behind.
pub fn augment_all(
    original: &Prompt,
    subject: Option<&str>,
    resources: &AugmentResources<'_>,
    config: &AugmentConfig,
) -> Augmentation {
    let mut result = Augmentation { prompts: vec![original.clone()], ..Default::default() };
    let mask = WordMask::content_words(resources.stopwords, subject);

    for method in AugmentationType::ALL.into_iter().skip(1) {
        let quota = config.quotas.get(method);
        if quota == 0 {
            continue;
        }
        let produced: Result<Vec<Prompt>, AugmentError> = match method {
            AugmentationType::SynonymLexicon => Ok(synonym_variants(original, resources.lexicon, quota, &mask)),
            AugmentationType::SynonymEmbedding => {
                Ok(embedding_synonym_variants(original, resources.embeddings, quota, &mask))
            }
            AugmentationType::StopwordFilter => stopword_filter(original, resources.stopwords).map(|p| vec![p]),
            bt => {
                let pivot = bt.pivot().expect("back-translation tag");
                match resources.translator {
                    Some(t) => back_translate(original, pivot, t, config.fan_out, quota),
                    None => Err(AugmentError::Resource("translator unavailable".into())),
                }
            }
        };
        let variants = match produced {
            Ok(v) => v,
            Err(e) => {
                result.warnings.push(AugmentWarning { method, message: e.to_string() });
                Vec::new()
            }
        };
        let before = result.prompts.len();
        result.prompts.extend(variants.into_iter().take(quota));
        let count = result.prompts.len() - before;
        if count < quota {
            result.shortfalls.push(Shortfall { method, quota, produced: count });
        }
    }
    result
}
