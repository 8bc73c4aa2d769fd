//! Hearst-pattern probe queries and masked pair representations.
//!
//! A probe renders a template with two mask slots standing in for an entity
//! pair. The embedding provider returns the hidden vector at each mask; the
//! pair representation is their element-wise mean.

mod http;
mod provider;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Embedding, PairMention, Provenance};

pub use http::HttpProvider;
pub use provider::{EmbeddingProvider, HashingProvider, MaskVectors};

/// Placeholder written in pattern templates; rewritten to the provider's mask token.
pub const MASK_PLACEHOLDER: &str = "[MASK]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Analogous,
    Contrastive,
}

impl PatternKind {
    pub fn provenance(self) -> Provenance {
        match self {
            PatternKind::Analogous => Provenance::AnalogousPattern,
            PatternKind::Contrastive => Provenance::ContrastivePattern,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    HeadSeed,
    TailSeed,
    ClassName,
}

impl Slot {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "head_seed" => Some(Slot::HeadSeed),
            "tail_seed" => Some(Slot::TailSeed),
            "class_name" => Some(Slot::ClassName),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Slot::HeadSeed => "head_seed",
            Slot::TailSeed => "tail_seed",
            Slot::ClassName => "class_name",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(Slot),
    Mask,
}

fn parse_template(template: &str) -> Result<Vec<Segment>> {
    let invalid = |reason: String| Error::InvalidTemplate {
        template: template.to_string(),
        reason,
    };
    let mut segments = Vec::new();
    let mut text = String::new();
    let mut rest = template;
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix(MASK_PLACEHOLDER) {
            if !text.is_empty() {
                segments.push(Segment::Text(std::mem::take(&mut text)));
            }
            segments.push(Segment::Mask);
            rest = after;
        } else if let Some(after) = rest.strip_prefix('{') {
            let close = after
                .find('}')
                .ok_or_else(|| invalid("unterminated slot".into()))?;
            let name = &after[..close];
            let slot = Slot::parse(name).ok_or_else(|| invalid(format!("unknown slot `{name}`")))?;
            if !text.is_empty() {
                segments.push(Segment::Text(std::mem::take(&mut text)));
            }
            segments.push(Segment::Slot(slot));
            rest = &after[close + 1..];
        } else {
            let ch = rest.chars().next().expect("non-empty");
            text.push(ch);
            rest = &rest[ch.len_utf8()..];
        }
    }
    if !text.is_empty() {
        segments.push(Segment::Text(text));
    }
    let masks = segments.iter().filter(|s| **s == Segment::Mask).count();
    if masks != 2 {
        return Err(invalid(format!("expected exactly 2 `{MASK_PLACEHOLDER}` placeholders, found {masks}")));
    }
    Ok(segments)
}

/// A probe template with named slots and exactly two mask placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPattern", into = "RawPattern")]
pub struct HearstPattern {
    pattern_id: String,
    kind: PatternKind,
    template: String,
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct RawPattern {
    pattern_id: String,
    kind: PatternKind,
    template: String,
}

impl TryFrom<RawPattern> for HearstPattern {
    type Error = Error;

    fn try_from(raw: RawPattern) -> Result<Self> {
        HearstPattern::new(raw.pattern_id, raw.kind, raw.template)
    }
}

impl From<HearstPattern> for RawPattern {
    fn from(p: HearstPattern) -> Self {
        RawPattern {
            pattern_id: p.pattern_id,
            kind: p.kind,
            template: p.template,
        }
    }
}

impl HearstPattern {
    pub fn new(pattern_id: impl Into<String>, kind: PatternKind, template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        let segments = parse_template(&template)?;
        Ok(Self {
            pattern_id: pattern_id.into(),
            kind,
            template,
            segments,
        })
    }

    pub fn pattern_id(&self) -> &str {
        &self.pattern_id
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    /// The two patterns shipped when no pattern file is given.
    pub fn defaults() -> Vec<HearstPattern> {
        vec![
            HearstPattern::new(
                "analogous-0",
                PatternKind::Analogous,
                "{head_seed} is to {tail_seed} what [MASK] is to [MASK] .",
            )
            .expect("valid default"),
            HearstPattern::new(
                "contrastive-0",
                PatternKind::Contrastive,
                "unlike {head_seed} and {tail_seed} , [MASK] has a different relation to [MASK] .",
            )
            .expect("valid default"),
        ]
    }
}

/// A rendered probe text together with where its two masks sit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeQuery {
    pub text: String,
    /// Character offsets of the two mask tokens in `text`.
    pub mask_positions: [usize; 2],
    pub pattern_id: String,
    pub provenance: Provenance,
    pub bound_pair_id: Option<String>,
    pub bound_class: Option<String>,
}

impl ProbeQuery {
    pub fn with_pair_id(mut self, pair_id: impl Into<String>) -> Self {
        self.bound_pair_id = Some(pair_id.into());
        self
    }
}

/// Head and tail strings bound into `{head_seed}` and `{tail_seed}`.
#[derive(Debug, Clone, Copy)]
pub struct SeedBinding<'a> {
    pub head: &'a str,
    pub tail: &'a str,
}

/// Renders `pattern`, substituting bindings verbatim and each mask
/// placeholder with `mask_token`.
pub fn render_query(
    pattern: &HearstPattern,
    seed: Option<SeedBinding<'_>>,
    class_name: Option<&str>,
    mask_token: &str,
) -> Result<ProbeQuery> {
    let mut text = String::new();
    let mut chars = 0usize;
    let mut masks = Vec::with_capacity(2);
    let mut push = |text: &mut String, s: &str| {
        text.push_str(s);
        chars += s.chars().count();
        chars
    };
    for segment in &pattern.segments {
        match segment {
            Segment::Text(s) => {
                push(&mut text, s);
            }
            Segment::Mask => {
                let end = push(&mut text, mask_token);
                masks.push(end - mask_token.chars().count());
            }
            Segment::Slot(slot) => {
                let value = match slot {
                    Slot::HeadSeed => seed.map(|s| s.head),
                    Slot::TailSeed => seed.map(|s| s.tail),
                    Slot::ClassName => class_name,
                }
                .ok_or_else(|| Error::MissingBinding(slot.name().to_string()))?;
                push(&mut text, value);
            }
        }
    }
    Ok(ProbeQuery {
        text,
        mask_positions: [masks[0], masks[1]],
        pattern_id: pattern.pattern_id.clone(),
        provenance: pattern.kind.provenance(),
        bound_pair_id: None,
        bound_class: class_name.map(str::to_string),
    })
}

/// Renders a sentence with the head and tail spans each replaced by a single mask.
pub fn render_mention(mention: &PairMention, mask_token: &str) -> Result<ProbeQuery> {
    mention.validate()?;
    let mut words: Vec<&str> = Vec::with_capacity(mention.tokens.len());
    let mut mask_words = Vec::with_capacity(2);
    let mut i = 0;
    while i < mention.tokens.len() {
        if i == mention.head_span.start || i == mention.tail_span.start {
            mask_words.push(words.len());
            words.push(mask_token);
            i = if i == mention.head_span.start {
                mention.head_span.end
            } else {
                mention.tail_span.end
            };
        } else {
            words.push(&mention.tokens[i]);
            i += 1;
        }
    }
    let mut offsets = Vec::with_capacity(2);
    let mut text = String::new();
    let mut chars = 0;
    for (w, word) in words.iter().enumerate() {
        if w > 0 {
            text.push(' ');
            chars += 1;
        }
        if mask_words.contains(&w) {
            offsets.push(chars);
        }
        text.push_str(word);
        chars += word.chars().count();
    }
    Ok(ProbeQuery {
        text,
        mask_positions: [offsets[0], offsets[1]],
        pattern_id: "mention".to_string(),
        provenance: Provenance::MentionContext,
        bound_pair_id: Some(mention.id.clone()),
        bound_class: None,
    })
}

fn mean_of_masks(masks: &MaskVectors, dim: usize, provenance: Provenance) -> Result<Embedding> {
    for v in masks.iter() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
    }
    let mean = masks[0]
        .iter()
        .zip(&masks[1])
        .map(|(&a, &b)| ((f64::from(a) + f64::from(b)) / 2.0) as f32)
        .collect();
    Embedding::new(mean, provenance)
}

/// Embeds a batch of queries; each result is the mean of its two mask vectors.
pub fn pair_representations(queries: &[ProbeQuery], provider: &dyn EmbeddingProvider) -> Result<Vec<Embedding>> {
    if queries.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<String> = queries.iter().map(|q| q.text.clone()).collect();
    let masks = provider.embed_masked(&texts)?;
    if masks.len() != queries.len() {
        return Err(Error::Provider(format!(
            "expected {} results, got {}",
            queries.len(),
            masks.len()
        )));
    }
    let dim = provider.dim();
    queries
        .iter()
        .zip(&masks)
        .map(|(q, m)| Ok(mean_of_masks(m, dim, q.provenance)?.with_source(query_id(q))))
        .collect()
}

fn query_id(q: &ProbeQuery) -> String {
    match &q.bound_pair_id {
        Some(pair) => format!("{}#{}", pair, q.pattern_id),
        None => q.pattern_id.clone(),
    }
}

pub fn pair_representation(query: &ProbeQuery, provider: &dyn EmbeddingProvider) -> Result<Embedding> {
    let mut out = pair_representations(std::slice::from_ref(query), provider)?;
    Ok(out.remove(0))
}

pub fn mention_representation(mention: &PairMention, provider: &dyn EmbeddingProvider) -> Result<Embedding> {
    let query = render_mention(mention, provider.mask_token())?;
    pair_representation(&query, provider)
}

/// Representations for every (seed, pattern) combination of the requested
/// kind, ordered seed-major then by pattern.
pub fn class_representations(
    class_name: &str,
    seeds: &[(String, String)],
    patterns: &[HearstPattern],
    kind: PatternKind,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Embedding>> {
    let selected: Vec<&HearstPattern> = patterns.iter().filter(|p| p.kind == kind).collect();
    if seeds.is_empty() {
        return Err(Error::Seeds(format!("class `{class_name}` has no seeds")));
    }
    if selected.is_empty() {
        return Err(Error::InvalidConfig(format!("no {kind:?} patterns supplied")));
    }
    let mut queries = Vec::with_capacity(seeds.len() * selected.len());
    for (head, tail) in seeds {
        for pattern in &selected {
            let binding = SeedBinding { head, tail };
            queries.push(render_query(pattern, Some(binding), Some(class_name), provider.mask_token())?);
        }
    }
    pair_representations(&queries, provider)
}

/// Element-wise mean of several same-kind representations of one pair.
pub fn average_representations(reps: &[Embedding]) -> Result<Embedding> {
    let first = reps.first().ok_or(Error::EmptyEmbedding)?;
    if reps.len() == 1 {
        return Ok(first.clone());
    }
    let dim = first.dim();
    let mut acc = vec![0.0f64; dim];
    for e in reps {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: e.dim(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(e.as_slice()) {
            *a += f64::from(x);
        }
    }
    let n = reps.len() as f64;
    Embedding::new(acc.into_iter().map(|a| (a / n) as f32).collect(), first.provenance)
}
