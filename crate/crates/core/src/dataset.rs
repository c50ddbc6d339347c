//! Relational facts, per-relation prompt templates, and prompt rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Placeholder substituted by the subject when rendering a template.
pub const SUBJECT_PLACEHOLDER: &str = "{subject}";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("{path}: cannot read: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("templates file: {0}")]
    Templates(String),
    #[error("line {line}: invalid fact: {message}")]
    InvalidFact { line: usize, message: String },
    #[error("invalid fact: {0}")]
    Fact(String),
    #[error("invalid template for {relation_id}: {message}")]
    InvalidTemplate { relation_id: String, message: String },
    #[error("no template for relation {0}")]
    MissingTemplate(String),
    #[error("conflicting templates for relation {0}")]
    ConflictingTemplate(String),
    #[error("duplicate fact ({subject}, {relation_id})")]
    Duplicate { subject: String, relation_id: String },
    #[error("cannot render prompt: subject is empty")]
    EmptySubject,
}

/// `(subject, relation_id)`, unique within a [`FactSet`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FactKey {
    pub subject: String,
    pub relation_id: String,
}

impl FactKey {
    pub fn new(subject: impl Into<String>, relation_id: impl Into<String>) -> Self {
        FactKey { subject: subject.into(), relation_id: relation_id.into() }
    }
}

impl fmt::Display for FactKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.subject, self.relation_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub subject: String,
    pub relation_id: String,
    pub relation_label: String,
    pub gold_object: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

pub fn is_relation_id(id: &str) -> bool {
    id.strip_prefix('P').is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
}

impl Fact {
    pub fn key(&self) -> FactKey {
        FactKey::new(&self.subject, &self.relation_id)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.subject.trim().is_empty() {
            return Err("subject is empty".into());
        }
        if self.gold_object.trim().is_empty() {
            return Err(format!("gold_object of {} is empty", self.subject));
        }
        if !is_relation_id(&self.relation_id) {
            return Err(format!("relation_id {:?} does not look like P<digits>", self.relation_id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    relation_id: String,
    template: String,
}

impl PromptTemplate {
    pub fn new(relation_id: impl Into<String>, template: impl Into<String>) -> Result<Self, DatasetError> {
        let relation_id = relation_id.into();
        let template = template.into();
        let occurrences = template.matches(SUBJECT_PLACEHOLDER).count();
        if occurrences != 1 {
            return Err(DatasetError::InvalidTemplate {
                relation_id,
                message: format!("expected exactly one {SUBJECT_PLACEHOLDER} placeholder, found {occurrences}"),
            });
        }
        Ok(PromptTemplate { relation_id, template })
    }

    pub fn relation_id(&self) -> &str {
        &self.relation_id
    }

    pub fn as_str(&self) -> &str {
        &self.template
    }
}

/// Substitutes `subject` for the placeholder, leaving every other byte intact.
pub fn render_prompt(template: &PromptTemplate, subject: &str) -> Result<String, DatasetError> {
    if subject.trim().is_empty() {
        return Err(DatasetError::EmptySubject);
    }
    Ok(template.template.replacen(SUBJECT_PLACEHOLDER, subject, 1))
}

/// A validated, immutable collection of facts with their templates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactSet {
    facts: Vec<Fact>,
    templates: BTreeMap<String, PromptTemplate>,
}

impl FactSet {
    pub fn new(facts: Vec<Fact>, templates: BTreeMap<String, PromptTemplate>) -> Result<Self, DatasetError> {
        let mut seen = BTreeSet::new();
        for fact in &facts {
            fact.validate().map_err(DatasetError::Fact)?;
            if !templates.contains_key(&fact.relation_id) {
                return Err(DatasetError::MissingTemplate(fact.relation_id.clone()));
            }
            if !seen.insert(fact.key()) {
                return Err(DatasetError::Duplicate {
                    subject: fact.subject.clone(),
                    relation_id: fact.relation_id.clone(),
                });
            }
        }
        Ok(FactSet { facts, templates })
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn templates(&self) -> &BTreeMap<String, PromptTemplate> {
        &self.templates
    }

    pub fn template(&self, relation_id: &str) -> Option<&PromptTemplate> {
        self.templates.get(relation_id)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// The fact's prompt with its template filled in.
    pub fn original_prompt(&self, fact: &Fact) -> Result<String, DatasetError> {
        let template =
            self.template(&fact.relation_id).ok_or_else(|| DatasetError::MissingTemplate(fact.relation_id.clone()))?;
        render_prompt(template, &fact.subject)
    }
}

/// Keeps the facts whose object is unique, preserving input order.
pub fn filter_unique_object(records: impl IntoIterator<Item = (Fact, usize)>) -> Vec<Fact> {
    records.into_iter().filter(|(_, count)| *count == 1).map(|(fact, _)| fact).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactRecord {
    subject: String,
    relation_id: String,
    relation_label: String,
    gold_object: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    template: Option<String>,
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path)
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Reads a JSON object mapping relation ids to template strings.
pub fn load_templates(path: &Path) -> Result<BTreeMap<String, PromptTemplate>, DatasetError> {
    let raw: BTreeMap<String, String> =
        serde_json::from_str(&read(path)?).map_err(|e| DatasetError::Templates(e.to_string()))?;
    raw.into_iter().map(|(id, t)| PromptTemplate::new(id.clone(), t).map(|t| (id, t))).collect()
}

/// Parses JSON-lines fact records. Inline `template` fields are merged with `templates`.
pub fn parse_facts(text: &str, mut templates: BTreeMap<String, PromptTemplate>) -> Result<FactSet, DatasetError> {
    let mut facts = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: FactRecord =
            serde_json::from_str(line).map_err(|e| DatasetError::Parse { line: line_no, message: e.to_string() })?;
        let fact = Fact {
            subject: record.subject,
            relation_id: record.relation_id,
            relation_label: record.relation_label,
            gold_object: record.gold_object,
            aliases: record.aliases,
        };
        fact.validate().map_err(|message| DatasetError::InvalidFact { line: line_no, message })?;
        if let Some(inline) = record.template {
            let inline = PromptTemplate::new(fact.relation_id.clone(), inline)?;
            match templates.get(&fact.relation_id) {
                Some(existing) if existing != &inline => {
                    return Err(DatasetError::ConflictingTemplate(fact.relation_id.clone()))
                }
                Some(_) => {}
                None => {
                    templates.insert(fact.relation_id.clone(), inline);
                }
            }
        }
        if !seen.insert(fact.key()) {
            return Err(DatasetError::Duplicate {
                subject: fact.subject.clone(),
                relation_id: fact.relation_id.clone(),
            });
        }
        facts.push(fact);
    }
    FactSet::new(facts, templates)
}

/// Loads a JSON-lines facts file and an optional sidecar templates file.
pub fn load_facts(facts_path: &Path, templates_path: Option<&Path>) -> Result<FactSet, DatasetError> {
    let templates = match templates_path {
        Some(p) => load_templates(p)?,
        None => BTreeMap::new(),
    };
    parse_facts(&read(facts_path)?, templates)
}
