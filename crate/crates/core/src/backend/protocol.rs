//! JSON wire format shared by the generation and translation endpoints.
//!
//! ```text
//! POST /v1/generate   {"prompt": s, "num_sequences": n}
//! POST /v1/translate  {"text": s, "source": l, "target": l, "num_candidates": n}
//!   200 -> {"candidates": [{"text": s, "log_score": x}, ...]}
//!   else -> {"error": s}
//! ```

use serde::{Deserialize, Serialize};

use super::{sort_candidates, BackendError, Generation};

pub const GENERATE_PATH: &str = "/v1/generate";
pub const TRANSLATE_PATH: &str = "/v1/translate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateBody {
    pub prompt: String,
    pub num_sequences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateBody {
    pub text: String,
    pub source: String,
    pub target: String,
    pub num_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub text: String,
    pub log_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesResponse {
    pub candidates: Vec<WireCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

impl From<&[Generation]> for CandidatesResponse {
    fn from(generations: &[Generation]) -> Self {
        CandidatesResponse {
            candidates: generations
                .iter()
                .map(|g| WireCandidate { text: g.text.clone(), log_score: g.log_score })
                .collect(),
        }
    }
}

impl CandidatesResponse {
    /// Validates every candidate, sorts descending and truncates to `limit`.
    /// Candidates with blank text are discarded.
    pub fn into_generations(self, limit: usize) -> Result<Vec<Generation>, BackendError> {
        let mut out = Vec::with_capacity(self.candidates.len());
        for (i, c) in self.candidates.into_iter().enumerate() {
            if !c.log_score.is_finite() || c.log_score > 0.0 {
                return Err(BackendError::Protocol(format!(
                    "candidate {i} ({:?}) has log_score {}, expected a finite value <= 0",
                    c.text, c.log_score
                )));
            }
            if c.text.trim().is_empty() {
                continue;
            }
            out.push(Generation { text: c.text, log_score: c.log_score });
        }
        sort_candidates(&mut out);
        out.truncate(limit);
        Ok(out)
    }
}

/// Parses a 200 response body.
pub fn parse_candidates(body: &[u8], limit: usize) -> Result<Vec<Generation>, BackendError> {
    let response: CandidatesResponse = serde_json::from_slice(body)
        .map_err(|e| BackendError::Protocol(format!("malformed candidates response: {e}")))?;
    response.into_generations(limit)
}

/// Extracts the message of a non-200 body, falling back to the raw text.
pub fn parse_error(body: &[u8]) -> String {
    match serde_json::from_slice::<ErrorResponse>(body) {
        Ok(e) => e.error,
        Err(_) => String::from_utf8_lossy(body).into_owned(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn positive_log_score_is_a_protocol_violation() {
        let body = br#"{"candidates":[{"text":"Princeton","log_score":-0.5},{"text":"Berlin","log_score":0.1}]}"#;
        let err = parse_candidates(body, 10).unwrap_err();
        match err {
            BackendError::Protocol(msg) => assert!(msg.contains("Berlin"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn response_is_sorted_and_truncated() {
        let body = br#"{"candidates":[{"text":"b","log_score":-2.0},{"text":"a","log_score":-1.0},{"text":"c","log_score":-3.0}]}"#;
        let g = parse_candidates(body, 2).unwrap();
        assert_eq!(g.iter().map(|g| g.text.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn blank_candidates_are_dropped() {
        let body = br#"{"candidates":[{"text":" ","log_score":-0.5},{"text":"a","log_score":-1.0}]}"#;
        assert_eq!(parse_candidates(body, 10).unwrap().len(), 1);
    }

    #[test]
    fn error_body_message() {
        assert_eq!(parse_error(br#"{"error":"overloaded"}"#), "overloaded");
        assert_eq!(parse_error(b"plain"), "plain");
    }

    #[test]
    fn malformed_json_is_protocol_error() {
        assert!(matches!(parse_candidates(b"{", 10), Err(BackendError::Protocol(_))));
    }

    proptest! {
        #[test]
        fn valid_response_round_trips(
            items in proptest::collection::vec(("[a-zA-Z ]{0,8}[a-z]", -50.0f64..=0.0), 0..12)
        ) {
            let mut gens: Vec<Generation> = items
                .into_iter()
                .map(|(t, s)| Generation::new(t, s).unwrap())
                .collect();
            sort_candidates(&mut gens);
            let bytes = serde_json::to_vec(&CandidatesResponse::from(gens.as_slice())).unwrap();
            let parsed = parse_candidates(&bytes, MAX).unwrap();
            prop_assert_eq!(parsed, gens);
        }
    }

    const MAX: usize = 64;
}
