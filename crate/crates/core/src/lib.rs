//! Co-set expansion of relation exemplars.
//!
//! Each relation class starts from a few seed entity pairs. Pairs are
//! represented by masked-language-model vectors taken at two mask slots in
//! Hearst-pattern probes (or in the original sentence for corpus mentions).
//! The engine ranks which classes are most confusable with each other, grows
//! every class's exemplar set with a sampled ensemble that requires a
//! candidate to outrank the confusable classes, and finally fuses the
//! resulting pair-class similarity with an external classifier's scores.
//!
//! Pipeline stages map onto modules:
//!
//! - [`probing`]: render probes and turn mask vectors into pair embeddings
//! - [`scoring`]: cosine, top-k pair-class score, classifier fusion
//! - [`classrank`]: per-exemplar class rankings and contrastive selection
//! - [`coexpand`]: the sampled ensemble expansion loop
//! - [`fuse_eval`]: fused prediction, confusion matrices, micro-F1
//! - [`ingest`]: dataset, seed, pattern, score and store files

pub mod classrank;
pub mod coexpand;
pub mod error;
pub mod fuse_eval;
pub mod ingest;
pub mod probing;
pub mod scoring;
pub mod store;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use store::{EmbeddingStore, StoreKey};
pub use types::{
    ContrastiveSet, Embedding, ExemplarSet, ExpansionConfig, Member, MemberListing, Origin, PairMention, Provenance,
    RankCombiner, SetListing,
};
