use std::time::Duration;

use reqwest::blocking::Client;
use serde::Serialize;

use super::protocol::{self, GenerateBody, TranslateBody, GENERATE_PATH, TRANSLATE_PATH};
use super::{validate_count, BackendError, Generation, GenerationRequest, Generator, Language, Translator};

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone)]
struct JsonClient {
    base: url::Url,
    client: Client,
}

impl JsonClient {
    fn new(base: url::Url) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(DEFAULT_TIMEOUT)
            .build()
            .map_err(|e| BackendError::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(JsonClient { base, client })
    }

    fn post<B: Serialize>(&self, path: &str, body: &B, limit: usize) -> Result<Vec<Generation>, BackendError> {
        let url = self.base.join(path).map_err(|e| BackendError::Config(format!("bad endpoint path {path}: {e}")))?;
        let response = self.client.post(url).json(body).send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        let bytes = response.bytes().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status { status: status.as_u16(), message: protocol::parse_error(&bytes) });
        }
        protocol::parse_candidates(&bytes, limit)
    }
}

/// Generation backend reached over HTTP.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    inner: JsonClient,
}

impl HttpGenerator {
    pub fn new(base: url::Url) -> Result<Self, BackendError> {
        Ok(HttpGenerator { inner: JsonClient::new(base)? })
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, BackendError> {
        request.validate()?;
        let body = GenerateBody { prompt: request.prompt.clone(), num_sequences: request.num_sequences };
        self.inner.post(GENERATE_PATH, &body, request.num_sequences)
    }
}

/// Translation backend reached over HTTP.
#[derive(Debug, Clone)]
pub struct HttpTranslator {
    inner: JsonClient,
}

impl HttpTranslator {
    pub fn new(base: url::Url) -> Result<Self, BackendError> {
        Ok(HttpTranslator { inner: JsonClient::new(base)? })
    }
}

impl Translator for HttpTranslator {
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
        let body = TranslateBody {
            text: text.to_string(),
            source: source.code().to_string(),
            target: target.code().to_string(),
            num_candidates,
        };
        self.inner.post(TRANSLATE_PATH, &body, num_candidates)
    }
}
