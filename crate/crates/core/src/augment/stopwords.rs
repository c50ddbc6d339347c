use std::collections::BTreeSet;
use std::path::Path;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::{AugmentError, AugmentationType, Prompt};

const BUNDLED_EN: &str = include_str!("../../data/stopwords_en.txt");

/// Lowercase stopwords. Membership is tested on the lowercased word.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StopwordSet(BTreeSet<String>);

impl StopwordSet {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordSet(words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).filter(|w| !w.is_empty()).collect())
    }

    /// The bundled English list shipped with the crate.
    pub fn bundled_english() -> Self {
        Self::parse(BUNDLED_EN)
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Canonical decomposition followed by removal of combining marks.
pub fn strip_diacritics(text: &str) -> String {
    text.nfd().filter(|c| !is_combining_mark(*c)).collect()
}

/// Removes stopwords and diacritics; whitespace collapses to single spaces.
pub fn stopword_filter(original: &Prompt, stopwords: &StopwordSet) -> Result<Prompt, AugmentError> {
    if stopwords.is_empty() {
        return Err(AugmentError::EmptyStopwords);
    }
    let stripped = strip_diacritics(&original.text);
    let mut kept: Vec<String> = Vec::new();
    for token in stripped.split_whitespace() {
        let core = token.trim_matches(|c: char| !c.is_alphanumeric());
        if core.is_empty() || !stopwords.contains(core) {
            kept.push(token.to_string());
            continue;
        }
        // Dropped word: its trailing punctuation stays on the previous token.
        let tail = &token[token.rfind(core).map(|i| i + core.len()).unwrap_or(token.len())..];
        if let Some(prev) = kept.last_mut() {
            prev.push_str(tail);
        }
    }
    if !kept.iter().any(|t| t.chars().any(char::is_alphanumeric)) {
        return Err(AugmentError::FullyFiltered);
    }
    Ok(original.variant(kept.join(" "), AugmentationType::StopwordFilter, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FactKey;

    fn prompt(text: &str) -> Prompt {
        Prompt::original(text, FactKey::new("s", "P1"))
    }

    #[test]
    fn removes_is_but_keeps_where() {
        let out =
            stopword_filter(&prompt("Where is Hans-Georg Gadamer buried?"), &StopwordSet::bundled_english()).unwrap();
        assert_eq!(out.text, "Where Hans-Georg Gadamer buried?");
        assert_eq!(out.augmentation, AugmentationType::StopwordFilter);
    }

    #[test]
    fn no_stopwords_is_identity() {
        let out = stopword_filter(&prompt("Gadamer buried where?"), &StopwordSet::bundled_english()).unwrap();
        assert_eq!(out.text, "Gadamer buried where?");
        assert_eq!(out.augmentation, AugmentationType::StopwordFilter);
    }

    #[test]
    fn diacritics_are_stripped() {
        assert_eq!(strip_diacritics("Où est né André?"), "Ou est ne Andre?");
        let out = stopword_filter(&prompt("Où est né André?"), &StopwordSet::new(["the"])).unwrap();
        assert_eq!(out.text, "Ou est ne Andre?");
    }

    #[test]
    fn whitespace_collapses_and_trailing_punctuation_survives() {
        let out = stopword_filter(&prompt("Who  wrote   the   book of?"), &StopwordSet::new(["the", "of"])).unwrap();
        assert_eq!(out.text, "Who wrote book?");
    }

    #[test]
    fn fully_filtered_prompt_is_an_error() {
        assert_eq!(
            stopword_filter(&prompt("is it the?"), &StopwordSet::new(["is", "it", "the"])),
            Err(AugmentError::FullyFiltered)
        );
        assert_eq!(stopword_filter(&prompt("x"), &StopwordSet::default()), Err(AugmentError::EmptyStopwords));
    }

    #[test]
    fn bundled_list_is_lowercase_and_excludes_interrogatives() {
        let s = StopwordSet::bundled_english();
        assert!(s.contains("Is") && s.contains("did") && s.contains("the"));
        for w in ["what", "which", "who", "whom", "when", "where", "why", "how"] {
            assert!(!s.contains(w), "{w}");
        }
    }
}
