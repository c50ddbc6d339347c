use std::ops::Range;

use super::stopwords::StopwordSet;

/// Byte spans of the words in `text`.
///
/// A word is a run of alphanumeric characters, allowing single apostrophes or
/// hyphens between them ("Where's", "Hans-Georg").
pub(crate) fn word_spans(text: &str) -> Vec<Range<usize>> {
    let is_joiner = |c: char| c == '\'' || c == '-' || c == '’';
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut last_alnum_end = 0;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
            last_alnum_end = i + c.len_utf8();
        } else if is_joiner(c) && start.is_some() {
            continue;
        } else if let Some(s) = start.take() {
            spans.push(s..last_alnum_end);
        }
    }
    if let Some(s) = start {
        spans.push(s..last_alnum_end);
    }
    spans
}

/// Which words a synonym method may replace.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordMask<'a> {
    stopwords: Option<&'a StopwordSet>,
    min_chars: usize,
    subject: Option<&'a str>,
}

impl<'a> WordMask<'a> {
    /// Every word is replaceable.
    pub fn none() -> Self {
        WordMask::default()
    }

    /// Content words only: not a stopword, longer than two characters, and
    /// outside every occurrence of `subject`.
    pub fn content_words(stopwords: &'a StopwordSet, subject: Option<&'a str>) -> Self {
        WordMask { stopwords: Some(stopwords), min_chars: 3, subject }
    }

    pub fn protect_subject(mut self, subject: &'a str) -> Self {
        self.subject = Some(subject);
        self
    }

    /// Spans of `text` that may be replaced, left to right.
    pub(crate) fn replaceable(&self, text: &str) -> Vec<Range<usize>> {
        let protected: Vec<Range<usize>> = match self.subject {
            Some(s) if !s.is_empty() => text.match_indices(s).map(|(i, m)| i..i + m.len()).collect(),
            _ => Vec::new(),
        };
        word_spans(text)
            .into_iter()
            .filter(|span| !protected.iter().any(|p| p.start < span.end && span.start < p.end))
            .filter(|span| {
                let word = &text[span.clone()];
                word.chars().count() >= self.min_chars && !self.stopwords.is_some_and(|s| s.contains(word))
            })
            .collect()
    }
}

/// Carries the capitalization of `original` over to `replacement`.
pub(crate) fn match_case(original: &str, replacement: &str) -> String {
    let mut chars = original.chars();
    let Some(first) = chars.next() else { return replacement.to_string() };
    let all_upper = original.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase);
    if all_upper && original.chars().filter(|c| c.is_alphabetic()).count() > 1 {
        return replacement.to_uppercase();
    }
    if first.is_uppercase() {
        let mut rc = replacement.chars();
        return match rc.next() {
            Some(f) => f.to_uppercase().chain(rc).collect(),
            None => String::new(),
        };
    }
    replacement.to_string()
}

pub(crate) fn splice(text: &str, span: &Range<usize>, replacement: &str) -> String {
    let mut out = String::with_capacity(text.len() + replacement.len());
    out.push_str(&text[..span.start]);
    out.push_str(replacement);
    out.push_str(&text[span.end..]);
    out
}
