//! TACRED-format relation instances, and a SemEval-2010 Task 8 converter
//! into the same record shape.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::schema::DatasetSchema;
use crate::error::{Error, Result};
use crate::types::PairMention;

/// One record of a TACRED-style JSON array. Span ends are inclusive.
/// Unlisted fields (`stanford_pos`, `subj_type`, ...) are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacredRecord {
    pub id: String,
    pub relation: String,
    pub token: Vec<String>,
    pub subj_start: usize,
    pub subj_end: usize,
    pub obj_start: usize,
    pub obj_end: usize,
}

impl TacredRecord {
    fn into_mention(self) -> Result<PairMention> {
        let span = |start: usize, end: usize, what: &str| {
            if end < start {
                Err(Error::InvalidSpan {
                    id: self.id.clone(),
                    reason: format!("{what} end {end} precedes start {start}"),
                })
            } else {
                Ok(start..end + 1)
            }
        };
        let mention = PairMention {
            head_span: span(self.subj_start, self.subj_end, "subject")?,
            tail_span: span(self.obj_start, self.obj_end, "object")?,
            id: self.id,
            tokens: self.token,
            gold_relation: Some(self.relation),
        };
        mention.validate()?;
        Ok(mention)
    }
}

fn line_of(source: &str, fragment: &str) -> usize {
    let offset = fragment.as_ptr() as usize - source.as_ptr() as usize;
    source[..offset].matches('\n').count() + 1
}

/// Parses a TACRED-format JSON array. Errors name the file line where the
/// offending record starts.
pub fn parse_relation_instances(source: &str, origin: &str, schema: &DatasetSchema) -> Result<Vec<PairMention>> {
    let malformed = |line: usize, reason: String| Error::Malformed {
        path: origin.to_string(),
        line,
        reason,
    };
    let raw: Vec<&RawValue> =
        serde_json::from_str(source).map_err(|e| malformed(e.line(), format!("not a JSON array of records: {e}")))?;
    let mut ids = HashSet::with_capacity(raw.len());
    let mut out = Vec::with_capacity(raw.len());
    for value in raw {
        let line = line_of(source, value.get());
        let record: TacredRecord = serde_json::from_str(value.get()).map_err(|e| malformed(line, e.to_string()))?;
        if !schema.contains(&record.relation) {
            return Err(malformed(
                line,
                format!("relation `{}` is not in schema `{}`", record.relation, schema.name),
            ));
        }
        if !ids.insert(record.id.clone()) {
            return Err(malformed(line, format!("duplicate id `{}`", record.id)));
        }
        out.push(record.into_mention().map_err(|e| malformed(line, e.to_string()))?);
    }
    Ok(out)
}

pub fn load_relation_instances(path: &Path, schema: &DatasetSchema) -> Result<Vec<PairMention>> {
    let source = std::fs::read_to_string(path)?;
    parse_relation_instances(&source, &path.display().to_string(), schema)
}

fn split_punct(word: &str, out: &mut Vec<String>) {
    const PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '(', ')', '"', '\''];
    let Some(start) = word.find(|c: char| !PUNCT.contains(&c)) else {
        out.extend(word.chars().map(String::from));
        return;
    };
    let last = word.rfind(|c: char| !PUNCT.contains(&c)).expect("has a non-punctuation char");
    let end = last + word[last..].chars().next().map_or(1, char::len_utf8);
    out.extend(word[..start].chars().map(String::from));
    out.push(word[start..end].to_string());
    out.extend(word[end..].chars().map(String::from));
}

/// Converts the SemEval-2010 Task 8 distribution format (numbered quoted
/// sentence with `<e1>`/`<e2>` tags, label line, comment line, blank line)
/// into TACRED-shaped records with `e1` as subject and `e2` as object.
pub fn convert_semeval(source: &str) -> Result<Vec<TacredRecord>> {
    let malformed = |line: usize, reason: &str| Error::Malformed {
        path: "semeval".into(),
        line,
        reason: reason.to_string(),
    };
    let lines: Vec<&str> = source.lines().collect();
    let mut records = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        let (id, sentence) = line
            .split_once('\t')
            .ok_or_else(|| malformed(i + 1, "expected `<id>\\t\"<sentence>\"`"))?;
        let sentence = sentence.trim().trim_matches('"');
        let relation = lines
            .get(i + 1)
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .ok_or_else(|| malformed(i + 2, "missing relation label"))?;

        let spaced = sentence
            .replace("<e1>", " <e1> ")
            .replace("</e1>", " </e1> ")
            .replace("<e2>", " <e2> ")
            .replace("</e2>", " </e2> ");
        let mut tokens = Vec::new();
        let (mut e1, mut e2) = ((None, None), (None, None));
        for word in spaced.split_whitespace() {
            match word {
                "<e1>" => e1.0 = Some(tokens.len()),
                "</e1>" => e1.1 = Some(tokens.len()),
                "<e2>" => e2.0 = Some(tokens.len()),
                "</e2>" => e2.1 = Some(tokens.len()),
                w => split_punct(w, &mut tokens),
            }
        }
        let span = |e: (Option<usize>, Option<usize>)| match e {
            (Some(s), Some(t)) if t > s => Ok((s, t - 1)),
            _ => Err(malformed(i + 1, "missing or empty entity tag")),
        };
        let (subj_start, subj_end) = span(e1)?;
        let (obj_start, obj_end) = span(e2)?;
        records.push(TacredRecord {
            id: id.trim().to_string(),
            relation: relation.to_string(),
            token: tokens,
            subj_start,
            subj_end,
            obj_start,
            obj_end,
        });
        // Sentence, label, comment.
        i += 3;
    }
    Ok(records)
}
