use std::time::Duration;

use ureq::Agent;

use super::provider::{EmbeddingProvider, MaskVectors};
use super::wire::{EmbedRequest, EmbedResponse, InfoResponse};
use crate::error::{Error, Result};

/// Client for an embedding service speaking the `/v1/info` + `/v1/embed` protocol.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    agent: Agent,
    base_url: String,
    info: InfoResponse,
    batch_size: usize,
}

impl HttpProvider {
    /// Connects and fetches the model description. Embedding requests are
    /// always sent in deterministic mode.
    pub fn connect(base_url: &str, timeout: Duration) -> Result<Self> {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let base_url = base_url.trim_end_matches('/').to_string();
        let mut resp = agent
            .get(&format!("{base_url}/v1/info"))
            .call()
            .map_err(|e| Error::Provider(format!("GET /v1/info: {e}")))?;
        check_status(&mut resp, "GET /v1/info")?;
        let info: InfoResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Provider(format!("GET /v1/info: {e}")))?;
        if info.dim == 0 {
            return Err(Error::Provider("service advertises dimension 0".into()));
        }
        Ok(Self {
            agent,
            base_url,
            info,
            batch_size: 64,
        })
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn model_id(&self) -> &str {
        &self.info.model_id
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<MaskVectors>> {
        let request = EmbedRequest {
            texts: texts.to_vec(),
            deterministic: true,
        };
        let mut resp = self
            .agent
            .post(&format!("{}/v1/embed", self.base_url))
            .send_json(&request)
            .map_err(|e| Error::Provider(format!("POST /v1/embed: {e}")))?;
        check_status(&mut resp, "POST /v1/embed")?;
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Provider(format!("POST /v1/embed: {e}")))?;
        if body.results.len() != texts.len() {
            return Err(Error::Provider(format!(
                "sent {} texts, received {} results",
                texts.len(),
                body.results.len()
            )));
        }
        if body.dim != self.info.dim {
            return Err(Error::Provider(format!(
                "response dimension {} differs from advertised {}",
                body.dim, self.info.dim
            )));
        }
        Ok(body.results.into_iter().map(|r| r.mask_vectors).collect())
    }
}

fn check_status(resp: &mut ureq::http::Response<ureq::Body>, what: &str) -> Result<()> {
    let status = resp.status();
    if status.is_success() {
        return Ok(());
    }
    let detail = resp.body_mut().read_to_string().unwrap_or_default();
    Err(Error::Provider(format!("{what}: HTTP {}: {detail}", status.as_u16())))
}

impl EmbeddingProvider for HttpProvider {
    fn mask_token(&self) -> &str {
        &self.info.mask_token
    }

    fn dim(&self) -> usize {
        self.info.dim
    }

    fn embed_masked(&self, texts: &[String]) -> Result<Vec<MaskVectors>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            out.extend(self.embed_batch(chunk)?);
        }
        Ok(out)
    }
}
