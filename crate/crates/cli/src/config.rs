use std::path::{Path, PathBuf};

use probe_core::aggregate::Strategy;
use probe_core::augment::AugmentConfig;
use probe_core::backend::{BackendDescriptor, BackendKind, Endpoint, DEFAULT_MAX_IN_FLIGHT, MAX_NUM_SEQUENCES};
use probe_core::evaluate::validate_k_values;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GEN_ENDPOINT_VAR: &str = "PROBE_GEN_ENDPOINT";
pub const MT_ENDPOINT_VAR: &str = "PROBE_MT_ENDPOINT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: malformed config: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// One model backend. `mock_table` is read when `endpoint` is `"mock"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub name: String,
    pub endpoint: String,
    #[serde(default)]
    pub case_insensitive_match: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_table: Option<PathBuf>,
}

impl BackendConfig {
    pub fn descriptor(&self, kind: BackendKind) -> BackendDescriptor {
        BackendDescriptor {
            name: self.name.clone(),
            kind,
            endpoint: self.endpoint.clone(),
            case_insensitive_match: self.case_insensitive_match,
        }
    }
}

/// Augmentation resources. Missing lexicon or embeddings disable that method;
/// missing stopwords fall back to the bundled English list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
}

fn default_k_values() -> Vec<usize> {
    vec![1, 2, 5, 10, 20, 30]
}

fn default_iterations() -> usize {
    5
}

fn default_num_sequences() -> usize {
    10
}

fn default_max_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A run, as read from a JSON config file. Relative paths are resolved
/// against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub facts_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates_path: Option<PathBuf>,
    pub generation: BackendConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<BackendConfig>,
    #[serde(default)]
    pub resources: ResourcePaths,
    #[serde(default)]
    pub augmentation: AugmentConfig,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub case_insensitive: bool,
    #[serde(default)]
    pub accept_aliases: bool,
    #[serde(default = "default_num_sequences")]
    pub num_sequences: usize,
    /// Worker threads; defaults to the number of cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config: RunConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError::Parse { path: base_dir.display().to_string(), message: e.to_string() })?;
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new(""));
        RunConfig::from_json(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.display().to_string(), message },
            other => other,
        })
    }

    /// Resolves a configured path against the config file's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Replaces backend endpoints with the given overrides. A translation
    /// override without a configured translation backend creates one.
    pub fn apply_endpoint_overrides(&mut self, generation: Option<String>, translation: Option<String>) {
        if let Some(endpoint) = generation {
            self.generation.endpoint = endpoint;
        }
        if let Some(endpoint) = translation {
            match &mut self.translation {
                Some(t) => t.endpoint = endpoint,
                None => {
                    self.translation = Some(BackendConfig {
                        name: "translation".into(),
                        endpoint,
                        case_insensitive_match: false,
                        mock_table: None,
                    })
                }
            }
        }
    }

    pub fn apply_env(&mut self) {
        let var = |name| std::env::var(name).ok().filter(|v: &String| !v.is_empty());
        self.apply_endpoint_overrides(var(GEN_ENDPOINT_VAR), var(MT_ENDPOINT_VAR));
    }

    /// Case folding applies when either the config or the generation backend asks for it.
    pub fn case_insensitive_scoring(&self) -> bool {
        self.case_insensitive || self.generation.case_insensitive_match
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let missing = |label: &str, path: &Path| {
            let resolved = self.resolve(path);
            (!resolved.is_file()).then(|| format!("{label} {} does not exist", resolved.display()))
        };
        problems.extend(missing("facts_path", &self.facts_path));
        if let Some(p) = &self.templates_path {
            problems.extend(missing("templates_path", p));
        }
        for (label, path) in [
            ("resources.lexicon", &self.resources.lexicon),
            ("resources.embeddings", &self.resources.embeddings),
            ("resources.stopwords", &self.resources.stopwords),
        ] {
            if let Some(p) = path {
                problems.extend(missing(label, p));
            }
        }
        for (label, backend) in [("generation", Some(&self.generation)), ("translation", self.translation.as_ref())] {
            let Some(backend) = backend else { continue };
            match backend.endpoint.parse::<Endpoint>() {
                Ok(Endpoint::Mock) => match &backend.mock_table {
                    Some(p) => problems.extend(missing(&format!("{label}.mock_table"), p)),
                    None => problems.push(format!("{label} uses the mock endpoint but has no mock_table")),
                },
                Ok(Endpoint::Url(_)) => {}
                Err(e) => problems.push(format!("{label}: {e}")),
            }
        }
        if let Err(e) = self.augmentation.quotas.validate() {
            problems.push(e);
        }
        if self.augmentation.fan_out == 0 {
            problems.push("augmentation.fan_out must be at least 1".into());
        }
        if let Err(e) = validate_k_values(&self.k_values) {
            problems.push(e.to_string());
        }
        if self.iterations == 0 {
            problems.push("iterations must be at least 1".into());
        }
        if !(1..=MAX_NUM_SEQUENCES).contains(&self.num_sequences) {
            problems.push(format!("num_sequences must be in 1..={MAX_NUM_SEQUENCES}"));
        }
        if self.max_in_flight == 0 {
            problems.push("max_in_flight must be at least 1".into());
        }
        if self.workers == Some(0) {
            problems.push("workers must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }
}
