//! Scored-sequence sources: text generation and machine translation.
//!
//! The harness never decodes anything itself. A backend hands back a list of
//! `(text, log_score)` candidates, either from an in-process lookup table
//! ([`MockGenerator`], [`MockTranslator`]) or from a remote service speaking the
//! JSON protocol in [`protocol`].

mod http;
mod mock;
pub mod protocol;
mod retry;

use std::fmt;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpGenerator, HttpTranslator};
pub use mock::{mock_backend, MockGenerator, MockTranslator, TranslationEntry};
pub use retry::{with_retry, RetryPolicy};

/// Beam size used for every generation request unless overridden.
pub const DEFAULT_NUM_SEQUENCES: usize = 10;
/// Upper bound accepted for `num_sequences` / `num_candidates`.
pub const MAX_NUM_SEQUENCES: usize = 64;
/// Default number of translation candidates per direction.
pub const DEFAULT_NUM_CANDIDATES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend returned status {status}: {message}")]
    Status { status: u16, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid candidate: {0}")]
    Invalid(String),
}

impl BackendError {
    /// Transport failures, throttling and server-side errors are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// One scored candidate. `log_score` is the natural log of the sequence probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub log_score: f64,
}

impl Generation {
    pub fn new(text: impl Into<String>, log_score: f64) -> Result<Self, BackendError> {
        let text = text.into();
        if !log_score.is_finite() || log_score > 0.0 {
            return Err(BackendError::Invalid(format!(
                "candidate {text:?} has log_score {log_score}, expected a finite value <= 0"
            )));
        }
        if text.trim().is_empty() {
            return Err(BackendError::Invalid("candidate text is empty".into()));
        }
        Ok(Generation { text, log_score })
    }

    pub fn from_probability(text: impl Into<String>, probability: f64) -> Result<Self, BackendError> {
        let text = text.into();
        if !(probability > 0.0 && probability <= 1.0) {
            return Err(BackendError::Invalid(format!(
                "candidate {text:?} has probability {probability}, expected a value in (0, 1]"
            )));
        }
        Generation::new(text, probability.ln())
    }

    pub fn probability(&self) -> f64 {
        self.log_score.exp()
    }
}

/// Sort descending by log-score; equal scores keep their incoming order.
pub(crate) fn sort_candidates(candidates: &mut [Generation]) {
    candidates.sort_by(|a, b| b.log_score.total_cmp(&a.log_score));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub num_sequences: usize,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        GenerationRequest { prompt: prompt.into(), num_sequences: DEFAULT_NUM_SEQUENCES }
    }

    pub fn with_num_sequences(mut self, num_sequences: usize) -> Self {
        self.num_sequences = num_sequences;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        validate_count("num_sequences", self.num_sequences)
    }
}

pub(crate) fn validate_count(name: &str, n: usize) -> Result<(), BackendError> {
    if (1..=MAX_NUM_SEQUENCES).contains(&n) {
        Ok(())
    } else {
        Err(BackendError::Config(format!("{name} must be in 1..={MAX_NUM_SEQUENCES}, got {n}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Generation,
    Translation,
}

/// Where a backend lives: the literal `"mock"` or an HTTP base URL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Mock,
    Url(url::Url),
}

impl FromStr for Endpoint {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mock" {
            return Ok(Endpoint::Mock);
        }
        let url = url::Url::parse(s)
            .map_err(|e| BackendError::Config(format!("endpoint {s:?} is neither \"mock\" nor a URL: {e}")))?;
        match url.scheme() {
            "http" => Ok(Endpoint::Url(url)),
            other => Err(BackendError::Config(format!("endpoint {s:?} has unsupported scheme {other:?}"))),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Mock => f.write_str("mock"),
            Endpoint::Url(u) => write!(f, "{u}"),
        }
    }
}

/// Identity of a model backend as it appears in run configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    pub kind: BackendKind,
    pub endpoint: String,
    #[serde(default)]
    pub case_insensitive_match: bool,
}

impl BackendDescriptor {
    pub fn endpoint(&self) -> Result<Endpoint, BackendError> {
        self.endpoint.parse()
    }
}

/// Source language used by every prompt in the harness.
pub const SOURCE_LANGUAGE: Language = Language::En;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Fr,
    Ru,
    De,
    Es,
    Ja,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Fr => "fr",
            Language::Ru => "ru",
            Language::De => "de",
            Language::Es => "es",
            Language::Ja => "ja",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "en" => Language::En,
            "fr" => Language::Fr,
            "ru" => Language::Ru,
            "de" => Language::De,
            "es" => Language::Es,
            "ja" => Language::Ja,
            other => return Err(BackendError::Config(format!("unsupported language {other:?}"))),
        })
    }
}

/// A source of scored answer candidates for a prompt.
pub trait Generator: Send + Sync {
    /// Returns at most `request.num_sequences` candidates, sorted by `log_score` descending.
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, BackendError>;
}

/// A source of scored translations.
pub trait Translator: Send + Sync {
    fn translate(
        &self,
        text: &str,
        source: Language,
        target: Language,
        num_candidates: usize,
    ) -> Result<Vec<Generation>, BackendError>;
}

impl<T: Generator + ?Sized> Generator for &T {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, BackendError> {
        (**self).generate(request)
    }
}

impl<T: Generator + ?Sized> Generator for Box<T> {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, BackendError> {
        (**self).generate(request)
    }
}

impl<T: Translator + ?Sized> Translator for &T {
    fn translate(
        &self,
        text: &str,
        source: Language,
        target: Language,
        num_candidates: usize,
    ) -> Result<Vec<Generation>, BackendError> {
        (**self).translate(text, source, target, num_candidates)
    }
}

impl<T: Translator + ?Sized> Translator for Box<T> {
    fn translate(
        &self,
        text: &str,
        source: Language,
        target: Language,
        num_candidates: usize,
    ) -> Result<Vec<Generation>, BackendError> {
        (**self).translate(text, source, target, num_candidates)
    }
}

/// Counting semaphore bounding concurrent calls into one backend.
#[derive(Debug)]
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore { permits: Mutex::new(permits.max(1)), available: Condvar::new() }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut permits = self.permits.lock().unwrap_or_else(|e| e.into_inner());
            while *permits == 0 {
                permits = self.available.wait(permits).unwrap_or_else(|e| e.into_inner());
            }
            *permits -= 1;
        }
        let out = f();
        *self.permits.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.available.notify_one();
        out
    }
}

/// Wraps a backend so that at most `limit` requests are in flight at once.
#[derive(Debug)]
pub struct Throttled<B> {
    inner: B,
    gate: Semaphore,
}

/// Default in-flight limit per backend.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

impl<B> Throttled<B> {
    pub fn new(inner: B, limit: usize) -> Self {
        Throttled { inner, gate: Semaphore::new(limit) }
    }
}

impl<B: Generator> Generator for Throttled<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, BackendError> {
        self.gate.run(|| self.inner.generate(request))
    }
}

impl<B: Translator> Translator for Throttled<B> {
    fn translate(
        &self,
        text: &str,
        source: Language,
        target: Language,
        num_candidates: usize,
    ) -> Result<Vec<Generation>, BackendError> {
        self.gate.run(|| self.inner.translate(text, source, target, num_candidates))
    }
}

/// Retries retryable failures of the wrapped backend according to `policy`.
#[derive(Debug, Clone)]
pub struct Retrying<B> {
    inner: B,
    policy: RetryPolicy,
}

impl<B> Retrying<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        Retrying { inner, policy }
    }
}

impl<B: Generator> Generator for Retrying<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, BackendError> {
        with_retry(&self.policy, || self.inner.generate(request))
    }
}

impl<B: Translator> Translator for Retrying<B> {
    fn translate(
        &self,
        text: &str,
        source: Language,
        target: Language,
        num_candidates: usize,
    ) -> Result<Vec<Generation>, BackendError> {
        with_retry(&self.policy, || self.inner.translate(text, source, target, num_candidates))
    }
}
