//! The whole pipeline for one config: load, augment, generate, aggregate, evaluate.

use std::collections::BTreeMap;

use probe_core::aggregate::Strategy;
use probe_core::augment::{
    augment_all, AugmentResources, AugmentationType, EmbeddingTable, Prompt, StopwordSet, SynonymLexicon,
};
use probe_core::backend::{
    BackendError, BackendKind, Endpoint, GenerationRequest, Generator, HttpGenerator, HttpTranslator, MockGenerator,
    MockTranslator, RetryPolicy, Retrying, Throttled, Translator,
};
use probe_core::dataset::{load_facts, Fact, FactKey, FactSet};
use probe_core::evaluate::{
    baseline_prediction, calibration_table, k_subset_experiment, predict_subset, relative_effect, CalibrationBin,
    EvaluateError, FactProbe, KCurve, PredictionRecord, RelativeEffect, Scoring,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

pub const VERSION: &str = concat!("probe ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dataset: {0}")]
    Dataset(#[from] probe_core::dataset::DatasetError),
    #[error("resource: {0}")]
    Resource(String),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("evaluation: {0}")]
    Evaluate(#[from] EvaluateError),
}

impl RunError {
    /// Whether the failure is a problem with the inputs rather than the run.
    pub fn is_validation(&self) -> bool {
        matches!(self, RunError::Config(_) | RunError::Dataset(_) | RunError::Resource(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    Tta,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Tta => "tta",
        }
    }
}

/// Something that went wrong for one fact or one stage without stopping the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunWarning {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fact: Option<FactKey>,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactShortfall {
    pub fact: FactKey,
    pub method: AugmentationType,
    pub quota: usize,
    pub produced: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptCount {
    pub fact: FactKey,
    pub prompts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub baseline: Vec<CalibrationBin>,
    pub tta: Vec<CalibrationBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSummary {
    pub relation_id: String,
    pub relation_label: String,
    pub facts: usize,
    pub relative_effect: RelativeEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    pub baseline_records: Vec<PredictionRecord>,
    pub tta_records: Vec<PredictionRecord>,
    pub kcurve: KCurve,
    pub calibration: Calibration,
    pub per_relation: Vec<RelationSummary>,
    pub prompt_counts: Vec<PromptCount>,
    pub shortfalls: Vec<FactShortfall>,
    pub warnings: Vec<RunWarning>,
}

impl RunReport {
    pub fn records(&self, condition: Condition) -> &[PredictionRecord] {
        match condition {
            Condition::Baseline => &self.baseline_records,
            Condition::Tta => &self.tta_records,
        }
    }
}

/// Owned augmentation resources loaded from a config.
pub struct Resources {
    pub lexicon: SynonymLexicon,
    pub embeddings: EmbeddingTable,
    pub stopwords: StopwordSet,
}

impl Resources {
    pub fn load(config: &RunConfig) -> Result<Self, RunError> {
        let r = &config.resources;
        let lexicon = match &r.lexicon {
            Some(p) => SynonymLexicon::from_file(&config.resolve(p)).map_err(|e| RunError::Resource(e.to_string()))?,
            None => SynonymLexicon::default(),
        };
        let embeddings = match &r.embeddings {
            Some(p) => EmbeddingTable::from_file(&config.resolve(p)).map_err(|e| RunError::Resource(e.to_string()))?,
            None => EmbeddingTable::default(),
        };
        let stopwords = match &r.stopwords {
            Some(p) => {
                let path = config.resolve(p);
                StopwordSet::from_file(&path).map_err(|e| RunError::Resource(format!("{}: {e}", path.display())))?
            }
            None => StopwordSet::bundled_english(),
        };
        Ok(Resources { lexicon, embeddings, stopwords })
    }
}

pub fn load_fact_set(config: &RunConfig) -> Result<FactSet, RunError> {
    let templates = config.templates_path.as_ref().map(|p| config.resolve(p));
    Ok(load_facts(&config.resolve(&config.facts_path), templates.as_deref())?)
}

pub fn build_generator(config: &RunConfig) -> Result<Box<dyn Generator>, RunError> {
    let descriptor = config.generation.descriptor(BackendKind::Generation);
    let inner: Box<dyn Generator> = match descriptor.endpoint()? {
        Endpoint::Mock => {
            let table = config.generation.mock_table.as_ref().ok_or_else(|| {
                ConfigError::Invalid(vec!["generation uses the mock endpoint but has no mock_table".into()])
            })?;
            Box::new(MockGenerator::from_file(&config.resolve(table))?)
        }
        Endpoint::Url(url) => Box::new(HttpGenerator::new(url)?),
    };
    Ok(Box::new(Retrying::new(Throttled::new(inner, config.max_in_flight), RetryPolicy::default())))
}

pub fn build_translator(config: &RunConfig) -> Result<Option<Box<dyn Translator>>, RunError> {
    let Some(backend) = &config.translation else { return Ok(None) };
    let inner: Box<dyn Translator> = match backend.descriptor(BackendKind::Translation).endpoint()? {
        Endpoint::Mock => {
            let table = backend.mock_table.as_ref().ok_or_else(|| {
                ConfigError::Invalid(vec!["translation uses the mock endpoint but has no mock_table".into()])
            })?;
            Box::new(MockTranslator::from_file(&config.resolve(table))?)
        }
        Endpoint::Url(url) => Box::new(HttpTranslator::new(url)?),
    };
    Ok(Some(Box::new(Retrying::new(Throttled::new(inner, config.max_in_flight), RetryPolicy::default()))))
}

/// Loads everything named by `config` and runs it.
pub fn run_probe(config: &RunConfig) -> Result<RunReport, RunError> {
    config.validate()?;
    let facts = load_fact_set(config)?;
    let resources = Resources::load(config)?;
    let generator = build_generator(config)?;
    let translator = build_translator(config)?;
    run_with(config, &facts, &resources, generator.as_ref(), translator.as_deref())
}

/// Per-fact output of the parallel stage.
struct FactRun {
    probe: FactProbe,
    prompts: usize,
    warnings: Vec<RunWarning>,
    shortfalls: Vec<FactShortfall>,
}

fn probe_fact(
    config: &RunConfig,
    facts: &FactSet,
    fact: &Fact,
    resources: &AugmentResources<'_>,
    generator: &dyn Generator,
    scoring: &Scoring,
) -> FactRun {
    let key = fact.key();
    let warn = |stage: &str, message: String| RunWarning { fact: Some(key.clone()), stage: stage.into(), message };
    let mut warnings = Vec::new();
    let mut probe = FactProbe {
        key: key.clone(),
        gold: fact.gold_object.clone(),
        aliases: if scoring.accept_aliases { fact.aliases.clone() } else { Vec::new() },
        generations: Vec::new(),
    };

    let original = match facts.original_prompt(fact) {
        Ok(text) => Prompt::original(text, key.clone()),
        Err(e) => {
            warnings.push(warn("dataset", e.to_string()));
            probe.generations.push(Vec::new());
            return FactRun { probe, prompts: 0, warnings, shortfalls: Vec::new() };
        }
    };
    let augmentation = augment_all(&original, Some(&fact.subject), resources, &config.augmentation);
    warnings.extend(augmentation.warnings.iter().map(|w| warn("augment", format!("{}: {}", w.method, w.message))));
    let shortfalls = augmentation
        .shortfalls
        .iter()
        .map(|s| FactShortfall { fact: key.clone(), method: s.method, quota: s.quota, produced: s.produced })
        .collect();

    for (i, prompt) in augmentation.prompts.iter().enumerate() {
        let request = GenerationRequest::new(prompt.text.clone()).with_num_sequences(config.num_sequences);
        match generator.generate(&request) {
            Ok(beam) => probe.generations.push(beam),
            Err(e) => {
                warnings
                    .push(warn("generate", format!("{} prompt {:?} dropped: {e}", prompt.augmentation, prompt.text)));
                // The original keeps its slot so index 0 is always the baseline prompt.
                if i == 0 {
                    probe.generations.push(Vec::new());
                }
            }
        }
    }
    let prompts = probe.generations.len();
    FactRun { probe, prompts, warnings, shortfalls }
}

fn record(
    fact: &FactKey,
    prediction: (String, f64),
    k: usize,
    strategy: Strategy,
    probe: &FactProbe,
    scoring: &Scoring,
) -> PredictionRecord {
    let (final_text, confidence) = prediction;
    PredictionRecord {
        fact: fact.clone(),
        correct: scoring.is_correct(&final_text, &probe.gold, &probe.aliases),
        final_text,
        confidence,
        k,
        strategy,
    }
}

/// Runs the pipeline against already-built backends.
pub fn run_with(
    config: &RunConfig,
    facts: &FactSet,
    resources: &Resources,
    generator: &dyn Generator,
    translator: Option<&dyn Translator>,
) -> Result<RunReport, RunError> {
    let scoring =
        Scoring { case_insensitive: config.case_insensitive_scoring(), accept_aliases: config.accept_aliases };
    let augment_resources = AugmentResources {
        lexicon: &resources.lexicon,
        embeddings: &resources.embeddings,
        translator,
        stopwords: &resources.stopwords,
    };
    let workers = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .min(config.max_in_flight)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Resource(format!("worker pool: {e}")))?;
    let runs: Vec<FactRun> = pool.install(|| {
        facts
            .facts()
            .par_iter()
            .map(|fact| probe_fact(config, facts, fact, &augment_resources, generator, &scoring))
            .collect()
    });

    let mut warnings = Vec::new();
    let mut shortfalls = Vec::new();
    let mut prompt_counts = Vec::new();
    let mut baseline_records = Vec::new();
    let mut tta_records = Vec::new();
    let mut probes = Vec::new();
    for run in runs {
        let key = run.probe.key.clone();
        warnings.extend(run.warnings);
        shortfalls.extend(run.shortfalls);
        prompt_counts.push(PromptCount { fact: key.clone(), prompts: run.prompts });

        let normalizer = scoring.normalizer();
        match baseline_prediction(&run.probe.generations[0], &normalizer) {
            Some(p) => baseline_records.push(record(&key, p, 1, config.strategy, &run.probe, &scoring)),
            None => warnings.push(RunWarning {
                fact: Some(key.clone()),
                stage: "baseline".into(),
                message: "no candidates for the original prompt; record skipped".into(),
            }),
        }
        let all: Vec<usize> = (0..run.probe.generations.len()).collect();
        match predict_subset(&run.probe, &all, config.strategy, &scoring) {
            Some(p) => tta_records.push(record(&key, p, all.len(), config.strategy, &run.probe, &scoring)),
            None => warnings.push(RunWarning {
                fact: Some(key.clone()),
                stage: "tta".into(),
                message: "no candidates for any prompt; record skipped".into(),
            }),
        }
        probes.push(run.probe);
    }

    let smallest_pool = probes.iter().map(|p| p.generations.len()).min().unwrap_or(usize::MAX);
    let (k_values, dropped): (Vec<usize>, Vec<usize>) = config.k_values.iter().partition(|&&k| k <= smallest_pool);
    if !dropped.is_empty() {
        warnings.push(RunWarning {
            fact: None,
            stage: "kcurve".into(),
            message: format!("K values {dropped:?} exceed the smallest prompt pool ({smallest_pool}) and were skipped"),
        });
    }
    let kcurve = if k_values.is_empty() {
        KCurve { strategy: config.strategy, iterations: config.iterations, seed: config.seed, points: Vec::new() }
    } else {
        k_subset_experiment(&probes, &k_values, config.iterations, config.seed, config.strategy, &scoring)?
    };

    let calibration =
        Calibration { baseline: calibration_table(&baseline_records)?, tta: calibration_table(&tta_records)? };
    let per_relation = per_relation(facts, &baseline_records, &tta_records);

    let mut echo = config.clone();
    echo.base_dir = Default::default();
    Ok(RunReport {
        version: VERSION.into(),
        config: echo,
        baseline_records,
        tta_records,
        kcurve,
        calibration,
        per_relation,
        prompt_counts,
        shortfalls,
        warnings,
    })
}

fn per_relation(facts: &FactSet, baseline: &[PredictionRecord], tta: &[PredictionRecord]) -> Vec<RelationSummary> {
    let mut by_relation: BTreeMap<&str, (String, usize, u64, u64)> = BTreeMap::new();
    for fact in facts.facts() {
        by_relation.entry(&fact.relation_id).or_insert_with(|| (fact.relation_label.clone(), 0, 0, 0)).1 += 1;
    }
    for r in baseline.iter().filter(|r| r.correct) {
        if let Some(e) = by_relation.get_mut(r.fact.relation_id.as_str()) {
            e.3 += 1;
        }
    }
    for r in tta.iter().filter(|r| r.correct) {
        if let Some(e) = by_relation.get_mut(r.fact.relation_id.as_str()) {
            e.2 += 1;
        }
    }
    by_relation
        .into_iter()
        .map(|(id, (label, n, with, without))| RelationSummary {
            relation_id: id.to_string(),
            relation_label: label,
            facts: n,
            relative_effect: relative_effect(with, without),
        })
        .collect()
}
