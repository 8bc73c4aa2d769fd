//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An entity pair occurring inside one tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMention {
    pub id: String,
    pub tokens: Vec<String>,
    /// Token range of the head entity, end exclusive.
    pub head_span: Range<usize>,
    /// Token range of the tail entity, end exclusive.
    pub tail_span: Range<usize>,
    pub gold_relation: Option<String>,
}

impl PairMention {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidSpan {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        for (name, span) in [("head", &self.head_span), ("tail", &self.tail_span)] {
            if span.start >= span.end {
                return Err(bad(&format!("{name} span {span:?} is empty")));
            }
            if span.end > self.tokens.len() {
                return Err(bad(&format!(
                    "{name} span {span:?} exceeds {} tokens",
                    self.tokens.len()
                )));
            }
        }
        if self.head_span.start < self.tail_span.end && self.tail_span.start < self.head_span.end {
            return Err(bad("head and tail spans overlap"));
        }
        Ok(())
    }

    pub fn head_text(&self) -> String {
        self.tokens[self.head_span.clone()].join(" ")
    }

    pub fn tail_text(&self) -> String {
        self.tokens[self.tail_span.clone()].join(" ")
    }
}

/// Which probe produced an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    AnalogousPattern,
    ContrastivePattern,
    MentionContext,
}

impl Provenance {
    pub const ALL: [Provenance; 3] = [
        Provenance::AnalogousPattern,
        Provenance::ContrastivePattern,
        Provenance::MentionContext,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::AnalogousPattern => "analogous_pattern",
            Provenance::ContrastivePattern => "contrastive_pattern",
            Provenance::MentionContext => "mention_context",
        }
    }

    /// Single-byte tag used by the binary store format.
    pub fn code(self) -> u8 {
        match self {
            Provenance::AnalogousPattern => 0,
            Provenance::ContrastivePattern => 1,
            Provenance::MentionContext => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.code() == code)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A finite real vector with the probe it came from.
///
/// Components are kept at 32-bit precision; every similarity computed from
/// them is carried out in 64-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    vector: Vec<f32>,
    pub provenance: Provenance,
    pub source_query_id: Option<String>,
}

impl Embedding {
    pub fn new(vector: Vec<f32>, provenance: Provenance) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::EmptyEmbedding);
        }
        if let Some(index) = vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            vector,
            provenance,
            source_query_id: None,
        })
    }

    pub fn with_source(mut self, query_id: impl Into<String>) -> Self {
        self.source_query_id = Some(query_id.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.vector
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.vector
    }
}

/// Whether an exemplar was supplied by the user or added by expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Seed,
    Expanded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub pair_id: String,
    pub embedding: Embedding,
    pub origin: Origin,
}

/// The current exemplars of one relation class, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarSet {
    pub class_name: String,
    members: Vec<Member>,
}

impl ExemplarSet {
    pub fn new(class_name: impl Into<String>) -> Self {
        Self {
            class_name: class_name.into(),
            members: Vec::new(),
        }
    }

    pub fn push(&mut self, pair_id: impl Into<String>, embedding: Embedding, origin: Origin) -> Result<()> {
        let pair_id = pair_id.into();
        if self.contains(&pair_id) {
            return Err(Error::DuplicateMember {
                class: self.class_name.clone(),
                pair_id,
            });
        }
        if let Some(first) = self.members.first() {
            if first.embedding.dim() != embedding.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.embedding.dim(),
                    actual: embedding.dim(),
                });
            }
        }
        self.members.push(Member {
            pair_id,
            embedding,
            origin,
        });
        Ok(())
    }

    pub fn contains(&self, pair_id: &str) -> bool {
        self.members.iter().any(|m| m.pair_id == pair_id)
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pair_ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|m| m.pair_id.as_str())
    }

    pub fn embeddings(&self) -> impl Iterator<Item = &Embedding> {
        self.members.iter().map(|m| &m.embedding)
    }

    /// Membership without vectors, for output files.
    pub fn listing(&self) -> SetListing {
        SetListing {
            class_name: self.class_name.clone(),
            members: self
                .members
                .iter()
                .map(|m| MemberListing {
                    pair_id: m.pair_id.clone(),
                    origin: m.origin,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberListing {
    pub pair_id: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetListing {
    pub class_name: String,
    pub members: Vec<MemberListing>,
}

/// Confusable classes selected for one positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveSet {
    pub positive_class: String,
    pub negatives: Vec<String>,
    pub scores: Vec<f64>,
}

/// How the positive and contrastive sampled scores combine into a pair rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankCombiner {
    /// Square root of the product of the zero-clamped scores.
    #[default]
    Geometric,
    /// Mean of the zero-clamped scores. Ablation only.
    Arithmetic,
}

/// Every tunable of the expansion procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionConfig {
    /// Number of top cosines averaged in the pair-class score.
    pub k: usize,
    /// Weight of the pair-class score when fused with classifier scores.
    pub lambda_weight: f64,
    /// Sampling rounds per candidate (T).
    pub ensemble_rounds: usize,
    /// Exemplars drawn per class per round.
    pub sample_size: usize,
    /// Contrastive classes kept per positive class (m).
    pub num_contrastive: usize,
    pub iterations: usize,
    pub additions_per_iteration: usize,
    pub master_seed: u64,
    pub rank_combiner: RankCombiner,
    /// Recompute contrastive sets before every iteration instead of once.
    pub rerank_each_iteration: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            k: 3,
            lambda_weight: 0.5,
            ensemble_rounds: 5,
            sample_size: 3,
            num_contrastive: 6,
            iterations: 4,
            additions_per_iteration: 5,
            master_seed: 0,
            rank_combiner: RankCombiner::Geometric,
            rerank_each_iteration: true,
        }
    }
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("k", self.k),
            ("ensemble_rounds", self.ensemble_rounds),
            ("sample_size", self.sample_size),
            ("num_contrastive", self.num_contrastive),
            ("additions_per_iteration", self.additions_per_iteration),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if !(self.lambda_weight.is_finite() && self.lambda_weight >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda_weight must be finite and non-negative, got {}",
                self.lambda_weight
            )));
        }
        Ok(())
    }
}
