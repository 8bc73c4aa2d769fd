//! Readers and writers for every on-disk artifact: TACRED-format datasets,
//! schemas, seed files, pattern files, classifier scores and embedding stores.

pub mod dataset;
pub mod patterns;
pub mod schema;
pub mod scores;
pub mod seeds;
pub mod store_io;

pub use dataset::{convert_semeval, load_relation_instances, parse_relation_instances, TacredRecord};
pub use patterns::{load_patterns, parse_patterns};
pub use schema::DatasetSchema;
pub use scores::{load_classifier_scores, parse_classifier_scores};
pub use seeds::{
    filter_seeds, load_seed_sets, parse_seed_sets, seed_pair_id, seeds_to_json, SeedFile, SeedRejection,
    DEFAULT_STOPWORDS,
};
pub use store_io::{load_store, read_store, store_to_bytes, write_store};
