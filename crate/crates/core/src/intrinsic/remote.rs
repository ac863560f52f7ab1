//! Client for the HTTP embedding service.
//!
//! Wire format (JSON both ways):
//!
//! - `GET /health` answers `{"status", "model_name", "dim", "preprocessing"}`.
//! - `POST /embed` takes `{"images": [<base64 PNG>, ...]}` (at most 256) and
//!   answers `{"dim", "vectors": [[f64; dim], ...]}` in input order.

use std::thread;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::provider::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::gridworld::RgbImage;

pub const ENDPOINT_ENV: &str = "GRIDCURIO_EMBED_URL";
pub const MAX_BATCH: usize = 256;
pub const ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_name: String,
    pub dim: usize,
    pub preprocessing: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

/// The endpoint to use: the environment override if set, else `configured`.
pub fn resolve_endpoint(configured: &str) -> String {
    std::env::var(ENDPOINT_ENV)
        .ok()
        .filter(|v| !v.trim().is_empty())
        .unwrap_or_else(|| configured.to_string())
}

pub fn encode_request(images: &[RgbImage]) -> EmbedRequest {
    let b64 = base64::engine::general_purpose::STANDARD;
    EmbedRequest {
        images: images.iter().map(|img| b64.encode(img.to_png())).collect(),
    }
}

pub struct RemoteProvider {
    base: String,
    dim: usize,
    agent: ureq::Agent,
    backoff: Duration,
    pub health: HealthResponse,
}

impl RemoteProvider {
    /// Checks `/health` and that the advertised dimension equals `dim`.
    pub fn connect(endpoint: &str, dim: usize) -> Result<Self> {
        Self::connect_with_backoff(endpoint, dim, Duration::from_millis(200))
    }

    pub fn connect_with_backoff(endpoint: &str, dim: usize, backoff: Duration) -> Result<Self> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        let base = endpoint.trim_end_matches('/').to_string();
        let url = format!("{base}/health");
        let health: HealthResponse = with_retries(backoff, || {
            agent
                .get(&url)
                .call()
                .map_err(|e| format!("GET {url}: {e}"))?
                .body_mut()
                .read_json::<HealthResponse>()
                .map_err(|e| format!("GET {url}: bad body: {e}"))
        })?;
        if health.dim != dim {
            return Err(Error::config(
                "intrinsic.embed_dim",
                format!("service advertises dim {} but {dim} was configured", health.dim),
            ));
        }
        Ok(RemoteProvider {
            base,
            dim,
            agent,
            backoff,
            health,
        })
    }

    fn embed_chunk(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>> {
        let url = format!("{}/embed", self.base);
        let body = encode_request(images);
        let resp: EmbedResponse = with_retries(self.backoff, || {
            self.agent
                .post(&url)
                .send_json(&body)
                .map_err(|e| format!("POST {url}: {e}"))?
                .body_mut()
                .read_json::<EmbedResponse>()
                .map_err(|e| format!("POST {url}: bad body: {e}"))
        })?;
        if resp.vectors.len() != images.len() {
            return Err(Error::Transport(format!(
                "service returned {} vectors for {} images",
                resp.vectors.len(),
                images.len()
            )));
        }
        if resp.dim != self.dim || resp.vectors.iter().any(|v| v.len() != self.dim) {
            return Err(Error::config(
                "intrinsic.embed_dim",
                format!("service returned vectors of dim {} (expected {})", resp.dim, self.dim),
            ));
        }
        Ok(resp.vectors)
    }
}

fn with_retries<T>(backoff: Duration, mut call: impl FnMut() -> std::result::Result<T, String>) -> Result<T> {
    let mut last = String::new();
    for attempt in 0..ATTEMPTS {
        match call() {
            Ok(v) => return Ok(v),
            Err(e) => {
                log::warn!("embedding service attempt {} failed: {e}", attempt + 1);
                last = e;
                if attempt + 1 < ATTEMPTS {
                    thread::sleep(backoff * 2u32.pow(attempt));
                }
            }
        }
    }
    Err(Error::Transport(format!("giving up after {ATTEMPTS} attempts: {last}")))
}

impl EmbeddingProvider for RemoteProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(MAX_BATCH) {
            out.extend(self.embed_chunk(chunk)?);
        }
        Ok(out)
    }
}
