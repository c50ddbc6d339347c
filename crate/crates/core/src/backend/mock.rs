use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    sort_candidates, validate_count, BackendError, Generation, GenerationRequest, Generator, Language, Translator,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TableCandidate {
    text: String,
    probability: f64,
}

fn to_generations(candidates: Vec<(String, f64)>) -> Result<Vec<Generation>, BackendError> {
    let mut out =
        candidates.into_iter().map(|(text, p)| Generation::from_probability(text, p)).collect::<Result<Vec<_>, _>>()?;
    sort_candidates(&mut out);
    Ok(out)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BackendError> {
    let bytes = std::fs::read(path)
        .map_err(|e| BackendError::Config(format!("cannot read mock table {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| BackendError::Config(format!("malformed mock table {}: {e}", path.display())))
}

/// In-process generation backend backed by a prompt → candidates lookup table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockGenerator {
    table: BTreeMap<String, Vec<Generation>>,
}

/// Builds a mock generation backend from probabilities in (0, 1].
pub fn mock_backend<I, C>(seed_table: I) -> Result<MockGenerator, BackendError>
where
    I: IntoIterator<Item = (String, C)>,
    C: IntoIterator<Item = (String, f64)>,
{
    let mut table = BTreeMap::new();
    for (prompt, candidates) in seed_table {
        let generations = to_generations(candidates.into_iter().collect())
            .map_err(|e| BackendError::Invalid(format!("mock entry for {prompt:?}: {e}")))?;
        table.insert(prompt, generations);
    }
    Ok(MockGenerator { table })
}

impl MockGenerator {
    /// Reads a JSON object mapping each prompt to `[{"text", "probability"}]`.
    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let raw: BTreeMap<String, Vec<TableCandidate>> = read_json(path)?;
        mock_backend(raw.into_iter().map(|(k, v)| (k, v.into_iter().map(|c| (c.text, c.probability)))))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Generator for MockGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, BackendError> {
        request.validate()?;
        Ok(self
            .table
            .get(&request.prompt)
            .map(|c| c.iter().take(request.num_sequences).cloned().collect())
            .unwrap_or_default())
    }
}

/// One row of a mock translation table file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationEntry {
    pub source: Language,
    pub target: Language,
    pub text: String,
    pub candidates: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
enum TranslationTable {
    Identity,
    Lookup { pairs: BTreeSet<(Language, Language)>, entries: BTreeMap<(Language, Language, String), Vec<Generation>> },
}

/// In-process translation backend.
#[derive(Debug, Clone, PartialEq)]
pub struct MockTranslator {
    table: TranslationTable,
}

impl MockTranslator {
    /// Returns the input text unchanged with log-score 0 for every language pair.
    pub fn identity() -> Self {
        MockTranslator { table: TranslationTable::Identity }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = TranslationEntry>) -> Result<Self, BackendError> {
        let mut pairs = BTreeSet::new();
        let mut table = BTreeMap::new();
        for e in entries {
            if e.source == e.target {
                return Err(BackendError::Config(format!(
                    "mock translation entry for {:?} uses the same source and target language",
                    e.text
                )));
            }
            pairs.insert((e.source, e.target));
            let generations = to_generations(e.candidates)
                .map_err(|err| BackendError::Invalid(format!("mock translation of {:?}: {err}", e.text)))?;
            table.insert((e.source, e.target, e.text), generations);
        }
        Ok(MockTranslator { table: TranslationTable::Lookup { pairs, entries: table } })
    }

    /// Reads a JSON array of [`TranslationEntry`].
    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let entries: Vec<TranslationEntry> = read_json(path)?;
        MockTranslator::from_entries(entries)
    }
}

impl Translator for MockTranslator {
    fn translate(
        &self,
        text: &str,
        source: Language,
        target: Language,
        num_candidates: usize,
    ) -> Result<Vec<Generation>, BackendError> {
        if source == target {
            return Err(BackendError::Config(format!("source and target are both {source}")));
        }
        validate_count("num_candidates", num_candidates)?;
        match &self.table {
            TranslationTable::Identity => Ok(vec![Generation::new(text, 0.0)?]),
            TranslationTable::Lookup { pairs, entries } => {
                if !pairs.contains(&(source, target)) {
                    return Err(BackendError::Config(format!("language pair {source}->{target} is not supported")));
                }
                Ok(entries
                    .get(&(source, target, text.to_string()))
                    .map(|c| c.iter().take(num_candidates).cloned().collect())
                    .unwrap_or_default())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn einstein() -> MockGenerator {
        mock_backend([(
            "Where did Albert Einstein die?".to_string(),
            vec![("Berlin".to_string(), 0.2), ("Princeton".to_string(), 0.6)],
        )])
        .unwrap()
    }

    #[test]
    fn lookup_returns_sorted_log_scores() {
        let g = einstein().generate(&GenerationRequest::new("Where did Albert Einstein die?")).unwrap();
        assert_eq!(
            g,
            vec![
                Generation { text: "Princeton".into(), log_score: 0.6f64.ln() },
                Generation { text: "Berlin".into(), log_score: 0.2f64.ln() },
            ]
        );
    }

    #[test]
    fn fewer_candidates_than_requested() {
        let g = mock_backend([(
            "q".to_string(),
            vec![("a".to_string(), 0.5), ("b".to_string(), 0.3), ("c".to_string(), 0.1)],
        )])
        .unwrap();
        assert_eq!(g.generate(&GenerationRequest::new("q").with_num_sequences(10)).unwrap().len(), 3);
        assert_eq!(g.generate(&GenerationRequest::new("q").with_num_sequences(2)).unwrap().len(), 2);
    }

    #[test]
    fn single_entry_and_unknown_prompt() {
        let g = mock_backend([("q".to_string(), vec![("a".to_string(), 0.5)])]).unwrap();
        assert_eq!(
            g.generate(&GenerationRequest::new("q")).unwrap(),
            vec![Generation { text: "a".into(), log_score: 0.5f64.ln() }]
        );
        assert!(g.generate(&GenerationRequest::new("unknown")).unwrap().is_empty());
    }

    #[test]
    fn probability_above_one_is_rejected() {
        let r = mock_backend([("q".to_string(), vec![("a".to_string(), 1.5)])]);
        assert!(matches!(r, Err(BackendError::Invalid(_))));
    }

    #[test]
    fn identity_translator() {
        let t = MockTranslator::identity();
        let out = t.translate("hello", Language::En, Language::Fr, 8).unwrap();
        assert_eq!(out, vec![Generation { text: "hello".into(), log_score: 0.0 }]);
        assert!(out.len() <= 8);
        assert!(matches!(t.translate("hello", Language::En, Language::En, 8), Err(BackendError::Config(_))));
    }

    #[test]
    fn lookup_translator_rejects_unknown_pairs() {
        let t = MockTranslator::from_entries([TranslationEntry {
            source: Language::En,
            target: Language::Fr,
            text: "hi".into(),
            candidates: vec![("salut".into(), 0.7)],
        }])
        .unwrap();
        assert_eq!(t.translate("hi", Language::En, Language::Fr, 8).unwrap().len(), 1);
        assert!(t.translate("other", Language::En, Language::Fr, 8).unwrap().is_empty());
        assert!(matches!(t.translate("hi", Language::En, Language::De, 8), Err(BackendError::Config(_))));
    }

    #[test]
    fn mock_is_deterministic() {
        let a = einstein().generate(&GenerationRequest::new("Where did Albert Einstein die?")).unwrap();
        let b = einstein().generate(&GenerationRequest::new("Where did Albert Einstein die?")).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    }
}
