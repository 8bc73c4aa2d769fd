//! JSON bodies exchanged with an HTTP embedding service.
//!
//! `GET /v1/info` answers [`InfoResponse`]; `POST /v1/embed` takes an
//! [`EmbedRequest`] and answers an [`EmbedResponse`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoResponse {
    pub model_id: String,
    pub dim: usize,
    pub mask_token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResult {
    pub mask_vectors: [Vec<f32>; 2],
    pub pair_vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub model_id: String,
    pub dim: usize,
    pub results: Vec<EmbedResult>,
}
