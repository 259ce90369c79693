//! HTTP client for the embedding service (`POST /v1/embed`, `GET /v1/health`).

use std::time::Duration;

use readmit_core::features::{
    assemble_document_embedding, mean_pool, DocumentEmbedding, TokenMatrix, CHUNK_SIZE, EMBED_DIM, MAX_TOKENS, N_CHUNKS,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMBED_URL_ENV: &str = "READMIT_EMBED_URL";

/// Largest request body the service accepts.
pub const MAX_TEXT_BYTES: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub text: String,
    pub max_tokens: usize,
    pub chunk_size: usize,
    /// Ask for the per-token matrices behind each pooled vector.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub debug: bool,
}

impl EmbedRequest {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into(), max_tokens: MAX_TOKENS, chunk_size: CHUNK_SIZE, debug: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub chunk_vectors: Vec<Vec<f64>>,
    pub token_counts: Vec<usize>,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debug_token_matrix: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    #[serde(default)]
    pub model_id: String,
    #[serde(default)]
    pub checkpoint_hash: String,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
    #[serde(default)]
    detail: String,
}

pub struct ServiceClient {
    base: String,
    agent: ureq::Agent,
}

impl ServiceClient {
    pub fn new(base_url: &str) -> Self {
        let agent = ureq::AgentBuilder::new().timeout_connect(Duration::from_secs(10)).timeout(Duration::from_secs(600)).build();
        Self { base: base_url.trim_end_matches('/').to_string(), agent }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Service { url: self.base.clone(), message: message.into() }
    }

    fn map_error(&self, e: ureq::Error) -> Error {
        match e {
            ureq::Error::Status(code, resp) => {
                let body = resp.into_string().unwrap_or_default();
                match serde_json::from_str::<ErrorBody>(&body) {
                    Ok(b) if b.detail.is_empty() => self.fail(format!("HTTP {code}: {}", b.error)),
                    Ok(b) => self.fail(format!("HTTP {code}: {}: {}", b.error, b.detail)),
                    Err(_) => self.fail(format!("HTTP {code}")),
                }
            }
            ureq::Error::Transport(t) => self.fail(t.to_string()),
        }
    }

    pub fn health(&self) -> Result<Health> {
        let resp = self.agent.get(&format!("{}/v1/health", self.base)).call().map_err(|e| self.map_error(e))?;
        resp.into_json().map_err(|e| self.fail(format!("bad health response: {e}")))
    }

    pub fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse> {
        if request.text.len() > MAX_TEXT_BYTES {
            return Err(self.fail(format!("text of {} bytes exceeds the {MAX_TEXT_BYTES}-byte limit", request.text.len())));
        }
        let resp = self
            .agent
            .post(&format!("{}/v1/embed", self.base))
            .send_json(request)
            .map_err(|e| self.map_error(e))?;
        let body: EmbedResponse = resp.into_json().map_err(|e| self.fail(format!("bad embed response: {e}")))?;
        validate_response(&body).map_err(|m| self.fail(m))?;
        Ok(body)
    }

    /// Embeds one document and assembles its 3072-value vector.
    pub fn embed_document(&self, hadm_id: u64, text: &str) -> Result<DocumentEmbedding> {
        let resp = self.embed(&EmbedRequest::new(text))?;
        to_document_embedding(hadm_id, &resp).map_err(|m| self.fail(m))
    }
}

/// Shape checks on a response: 4 vectors of 768 values and 4 counts.
pub fn validate_response(r: &EmbedResponse) -> Result<(), String> {
    if r.chunk_vectors.len() != N_CHUNKS || r.token_counts.len() != N_CHUNKS {
        return Err(format!(
            "expected {N_CHUNKS} chunk vectors and counts, got {} and {}",
            r.chunk_vectors.len(),
            r.token_counts.len()
        ));
    }
    if let Some(v) = r.chunk_vectors.iter().find(|v| v.len() != EMBED_DIM) {
        return Err(format!("chunk vector has {} values, expected {EMBED_DIM}", v.len()));
    }
    if r.token_counts.iter().sum::<usize>() > MAX_TOKENS {
        return Err(format!("token counts {:?} exceed {MAX_TOKENS}", r.token_counts));
    }
    if let Some(m) = &r.debug_token_matrix {
        if m.len() != N_CHUNKS {
            return Err(format!("debug_token_matrix has {} chunks", m.len()));
        }
    }
    Ok(())
}

pub fn to_document_embedding(hadm_id: u64, r: &EmbedResponse) -> Result<DocumentEmbedding, String> {
    validate_response(r)?;
    let counts: [usize; N_CHUNKS] = r.token_counts.as_slice().try_into().map_err(|_| "token_counts length".to_string())?;
    assemble_document_embedding(hadm_id, &r.chunk_vectors, counts).map_err(|e| e.to_string())
}

/// Largest per-component gap between each returned chunk vector and the
/// mean pool of its debug token matrix.
pub fn debug_pool_discrepancy(r: &EmbedResponse) -> Result<f64, String> {
    validate_response(r)?;
    let matrices = r.debug_token_matrix.as_ref().ok_or("response carries no debug_token_matrix")?;
    let mut worst = 0.0f64;
    for (vector, rows) in r.chunk_vectors.iter().zip(matrices) {
        let m = TokenMatrix::from_rows(rows).map_err(|e| e.to_string())?;
        for (a, b) in vector.iter().zip(mean_pool(&m)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}
