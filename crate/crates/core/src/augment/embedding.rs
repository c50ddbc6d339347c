use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use super::tokenize::{match_case, splice, WordMask};
use super::{AugmentError, AugmentationType, Prompt};

/// Word vectors, one row per vocabulary entry, all of the same dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(rows: Vec<(String, Vec<f64>)>) -> Result<Self, AugmentError> {
        let mut table = EmbeddingTable::default();
        let dim = rows.first().map(|(_, v)| v.len());
        for (word, vector) in rows {
            if vector.is_empty() || Some(vector.len()) != dim {
                return Err(AugmentError::Resource(format!(
                    "vector for {word:?} has dimension {}, expected {}",
                    vector.len(),
                    dim.unwrap_or(0)
                )));
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(AugmentError::Resource(format!("vector for {word:?} has a non-finite entry")));
            }
            if table.index.insert(word.clone(), table.vocab.len()).is_some() {
                return Err(AugmentError::Resource(format!("word {word:?} appears twice")));
            }
            table.norms.push(vector.iter().map(|x| x * x).sum::<f64>().sqrt());
            table.vocab.push(word);
            table.vectors.push(vector);
        }
        Ok(table)
    }

    /// Text format: one word per line followed by its whitespace-separated components.
    pub fn parse(text: &str) -> Result<Self, AugmentError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let vector = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| AugmentError::Resource(format!("embeddings line {}: {e}", i + 1)))?;
            rows.push((word.to_string(), vector));
        }
        EmbeddingTable::new(rows)
    }

    pub fn from_file(path: &Path) -> Result<Self, AugmentError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| AugmentError::Resource(format!("{}: {e}", path.display())))?;
        EmbeddingTable::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    fn lookup(&self, word: &str) -> Option<usize> {
        self.index.get(word).or_else(|| self.index.get(&word.to_lowercase())).copied()
    }

    /// Cosine similarity; zero when either vector has zero norm.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.cosine_at(self.lookup(a)?, self.lookup(b)?))
    }

    fn cosine_at(&self, i: usize, j: usize) -> f64 {
        let denom = self.norms[i] * self.norms[j];
        if denom == 0.0 {
            return 0.0;
        }
        let dot: f64 = self.vectors[i].iter().zip(&self.vectors[j]).map(|(x, y)| x * y).sum();
        dot / denom
    }

    /// Every other vocabulary word, most similar first; ties by text.
    pub fn neighbors(&self, word: &str) -> Vec<(&str, f64)> {
        let Some(i) = self.lookup(word) else { return Vec::new() };
        let mut out: Vec<(&str, f64)> =
            (0..self.vocab.len()).filter(|&j| j != i).map(|j| (self.vocab[j].as_str(), self.cosine_at(i, j))).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out
    }
}

/// Nearest-neighbour word swaps, one word per variant.
///
/// Candidates from all replaceable words compete on cosine similarity;
/// ties go to the lexicographically smaller replacement, then the earlier word.
pub fn embedding_synonym_variants(
    original: &Prompt,
    table: &EmbeddingTable,
    n: usize,
    mask: &WordMask<'_>,
) -> Vec<Prompt> {
    let text = &original.text;
    let mut candidates = Vec::new();
    for (position, span) in mask.replaceable(text).into_iter().enumerate() {
        let word = &text[span.clone()];
        for (neighbor, similarity) in table.neighbors(word) {
            if neighbor.eq_ignore_ascii_case(word) {
                continue;
            }
            candidates.push((similarity, neighbor, position, span.clone()));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)).then_with(|| a.2.cmp(&b.2)));

    let mut seen = BTreeSet::from([text.clone()]);
    let mut out = Vec::new();
    for (_, neighbor, _, span) in candidates {
        if out.len() == n {
            break;
        }
        let variant = splice(text, &span, &match_case(&text[span.clone()], neighbor));
        if seen.insert(variant.clone()) {
            out.push(original.variant(variant, AugmentationType::SynonymEmbedding, out.len()));
        }
    }
    out
}
