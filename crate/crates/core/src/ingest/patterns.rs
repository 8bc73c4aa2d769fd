use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::probing::HearstPattern;

/// Parses a JSON array of `{pattern_id, kind, template}` objects.
pub fn parse_patterns(source: &str) -> Result<Vec<HearstPattern>> {
    let patterns: Vec<HearstPattern> = serde_json::from_str(source)?;
    let mut seen = HashSet::new();
    for p in &patterns {
        if !seen.insert(p.pattern_id()) {
            return Err(Error::InvalidTemplate {
                template: p.template().to_string(),
                reason: format!("pattern id `{}` appears twice", p.pattern_id()),
            });
        }
    }
    if patterns.is_empty() {
        return Err(Error::EmptyInput("pattern file lists no patterns".into()));
    }
    Ok(patterns)
}

pub fn load_patterns(path: &Path) -> Result<Vec<HearstPattern>> {
    parse_patterns(&std::fs::read_to_string(path)?)
}
