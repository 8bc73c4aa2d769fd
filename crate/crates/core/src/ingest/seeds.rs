use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::schema::DatasetSchema;
use crate::error::{Error, Result};

/// Seed pairs per class, in the order written: `{"class": [["head", "tail"], ...]}`.
pub type SeedFile = IndexMap<String, Vec<(String, String)>>;

/// Pronouns that make poor exemplar heads or tails.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "yourselves", "he", "him", "his",
    "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we", "us", "our", "ours", "ourselves",
    "they", "them", "their", "theirs", "themselves", "who", "whom", "whose",
];

pub fn parse_seed_sets(source: &str, schema: &DatasetSchema) -> Result<SeedFile> {
    let seeds: SeedFile = serde_json::from_str(source)?;
    for (class, pairs) in &seeds {
        if !schema.contains(class) {
            return Err(Error::SchemaMismatch(format!(
                "seed class `{class}` is not in schema `{}`",
                schema.name
            )));
        }
        if pairs.is_empty() {
            return Err(Error::Seeds(format!("class `{class}` has an empty seed list")));
        }
        if pairs.iter().any(|(h, t)| h.trim().is_empty() || t.trim().is_empty()) {
            return Err(Error::Seeds(format!("class `{class}` has an empty head or tail")));
        }
    }
    Ok(seeds)
}

pub fn load_seed_sets(path: &Path, schema: &DatasetSchema) -> Result<SeedFile> {
    parse_seed_sets(&std::fs::read_to_string(path)?, schema)
}

pub fn seeds_to_json(seeds: &SeedFile) -> Result<String> {
    Ok(serde_json::to_string_pretty(seeds)?)
}

/// Store id of the `index`-th seed of `class`.
pub fn seed_pair_id(class: &str, index: usize) -> String {
    format!("seed:{class}:{index}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRejection {
    pub class: String,
    pub head: String,
    pub tail: String,
    pub matched: String,
}

/// Moves seeds whose head or tail is a stopword (case-insensitive, whole
/// string) into the rejection report.
pub fn filter_seeds<S: AsRef<str>>(seeds: &SeedFile, stopwords: &[S]) -> Result<(SeedFile, Vec<SeedRejection>)> {
    let stop: std::collections::HashSet<String> = stopwords.iter().map(|s| s.as_ref().to_lowercase()).collect();
    let mut kept = SeedFile::new();
    let mut rejected = Vec::new();
    for (class, pairs) in seeds {
        let mut keep = Vec::with_capacity(pairs.len());
        for (head, tail) in pairs {
            let hit = [head, tail].into_iter().find(|s| stop.contains(&s.trim().to_lowercase()));
            match hit {
                Some(word) => rejected.push(SeedRejection {
                    class: class.clone(),
                    head: head.clone(),
                    tail: tail.clone(),
                    matched: word.clone(),
                }),
                None => keep.push((head.clone(), tail.clone())),
            }
        }
        if keep.is_empty() {
            return Err(Error::Seeds(format!("class `{class}` has no seeds left after filtering")));
        }
        kept.insert(class.clone(), keep);
    }
    Ok((kept, rejected))
}
