use std::collections::HashSet;
use std::path::Path;

use super::schema::DatasetSchema;
use crate::error::{Error, Result};
use crate::fuse_eval::ClassifierScores;

/// Parses JSON lines of `{pair_id, scores: {class: value}}`. Every line must
/// score exactly the schema's classes; blank lines are skipped.
pub fn parse_classifier_scores(source: &str, origin: &str, schema: &DatasetSchema) -> Result<Vec<ClassifierScores>> {
    let malformed = |line: usize, reason: String| Error::Malformed {
        path: origin.to_string(),
        line,
        reason,
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, text) in source.lines().enumerate() {
        let line = i + 1;
        if text.trim().is_empty() {
            continue;
        }
        let rec: ClassifierScores = serde_json::from_str(text).map_err(|e| malformed(line, e.to_string()))?;
        if let Some(c) = rec.scores.keys().find(|c| !schema.contains(c)) {
            return Err(malformed(line, format!("class `{c}` is not in schema `{}`", schema.name)));
        }
        if rec.scores.len() != schema.relation_inventory.len() {
            return Err(malformed(
                line,
                format!(
                    "scores {} of the {} schema classes",
                    rec.scores.len(),
                    schema.relation_inventory.len()
                ),
            ));
        }
        if let Some((c, _)) = rec.scores.iter().find(|(_, v)| !v.is_finite()) {
            return Err(malformed(line, format!("score for `{c}` is not finite")));
        }
        if !seen.insert(rec.pair_id.clone()) {
            return Err(malformed(line, format!("duplicate pair id `{}`", rec.pair_id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_classifier_scores(path: &Path, schema: &DatasetSchema) -> Result<Vec<ClassifierScores>> {
    parse_classifier_scores(&std::fs::read_to_string(path)?, &path.display().to_string(), schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DatasetSchema {
        DatasetSchema {
            name: "tiny".into(),
            relation_inventory: vec!["none".into(), "a".into()],
            negative_label: "none".into(),
        }
    }

    #[test]
    fn parses_lines_in_order() {
        let src = "{\"pair_id\":\"p1\",\"scores\":{\"none\":0.1,\"a\":0.9}}\n\n{\"pair_id\":\"p0\",\"scores\":{\"a\":-1,\"none\":2}}\n";
        let s = parse_classifier_scores(src, "s", &tiny()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].pair_id, "p1");
        assert_eq!(s[1].scores["a"], -1.0);
    }

    #[test]
    fn coverage_and_duplicates_report_lines() {
        let line_of = |src: &str| match parse_classifier_scores(src, "s", &tiny()) {
            Err(Error::Malformed { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        let ok = "{\"pair_id\":\"p\",\"scores\":{\"none\":0,\"a\":1}}";
        assert_eq!(line_of(&format!("{ok}\n{{\"pair_id\":\"q\",\"scores\":{{\"a\":1}}}}")), 2);
        assert_eq!(line_of(&format!("{ok}\n{ok}")), 2);
        assert_eq!(line_of("{\"pair_id\":\"q\",\"scores\":{\"a\":1,\"b\":2}}"), 1);
        assert_eq!(line_of("not json"), 1);
    }
}
