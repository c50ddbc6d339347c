use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::tokenize::{match_case, splice, WordMask};
use super::{AugmentError, AugmentationType, Prompt};

/// Thesaurus mapping a lowercase headword to its synonyms, in preference order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self, AugmentError> {
        let mut normalized = BTreeMap::new();
        for (head, synonyms) in entries {
            let key = head.to_lowercase();
            let mut seen = BTreeSet::new();
            for s in &synonyms {
                if s.to_lowercase() == key {
                    return Err(AugmentError::Resource(format!("synonyms of {head:?} contain the headword")));
                }
                if s.trim().is_empty() {
                    return Err(AugmentError::Resource(format!("synonyms of {head:?} contain an empty entry")));
                }
                if !seen.insert(s.as_str()) {
                    return Err(AugmentError::Resource(format!("synonyms of {head:?} repeat {s:?}")));
                }
            }
            if normalized.insert(key, synonyms).is_some() {
                return Err(AugmentError::Resource(format!("headword {head:?} appears twice")));
            }
        }
        Ok(SynonymLexicon { entries: normalized })
    }

    /// Reads a JSON object mapping each word to a list of synonyms.
    pub fn from_file(path: &Path) -> Result<Self, AugmentError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| AugmentError::Resource(format!("{}: {e}", path.display())))?;
        let entries: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|e| AugmentError::Resource(format!("{}: {e}", path.display())))?;
        SynonymLexicon::new(entries)
    }

    pub fn synonyms(&self, word: &str) -> &[String] {
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Single-word synonym swaps, scanning words left to right and synonyms in lexicon order.
pub fn synonym_variants(original: &Prompt, lexicon: &SynonymLexicon, n: usize, mask: &WordMask<'_>) -> Vec<Prompt> {
    let text = &original.text;
    let mut seen = BTreeSet::from([text.clone()]);
    let mut out = Vec::new();
    for span in mask.replaceable(text) {
        let word = &text[span.clone()];
        for synonym in lexicon.synonyms(word) {
            if out.len() == n {
                return out;
            }
            let variant = splice(text, &span, &match_case(word, synonym));
            if seen.insert(variant.clone()) {
                out.push(original.variant(variant, AugmentationType::SynonymLexicon, out.len()));
            }
        }
    }
    out
}
