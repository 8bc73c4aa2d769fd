//! Fusing classifier scores with pair-class similarity, and evaluation.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coexpand::ClassState;
use crate::error::{Error, Result};
use crate::scoring::{fuse_score, pair_class_score};
use crate::types::{Embedding, ExpansionConfig};

/// External classifier scores for one pair, on whatever scale it exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierScores {
    pub pair_id: String,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub pair_id: String,
    pub predicted_class: String,
    pub fused_scores: BTreeMap<String, f64>,
}

/// Highest score; ties go to the lexicographically smallest class.
pub fn argmax(scores: &BTreeMap<String, f64>) -> Option<&str> {
    let mut best: Option<(&str, f64)> = None;
    for (class, &s) in scores {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((class, s)),
        }
    }
    best.map(|(c, _)| c)
}

pub fn fuse_predict(
    cls: &ClassifierScores,
    x_p: &Embedding,
    sets: &ClassState,
    config: &ExpansionConfig,
) -> Result<Prediction> {
    if cls.scores.len() != sets.len() || !cls.scores.keys().all(|c| sets.contains_key(c)) {
        return Err(Error::SchemaMismatch(format!(
            "classifier scores for `{}` cover {} classes that differ from the {} exemplar classes",
            cls.pair_id,
            cls.scores.len(),
            sets.len()
        )));
    }
    let mut fused = BTreeMap::new();
    for (class, &s_cls) in &cls.scores {
        let sim = pair_class_score(x_p, &sets[class], config.k)?;
        fused.insert(class.clone(), fuse_score(s_cls, sim, config.lambda_weight)?);
    }
    let predicted_class = argmax(&fused).ok_or(Error::EmptyIndex)?.to_string();
    Ok(Prediction {
        pair_id: cls.pair_id.clone(),
        predicted_class,
        fused_scores: fused,
    })
}

/// Counts indexed `[gold][predicted]` in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, gold: usize) -> u64 {
        self.counts[gold].iter().sum()
    }

    /// Header row and first column carry class names; the corner cell is `gold\predicted`.
    pub fn to_csv(&self) -> String {
        let quote = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = String::from("gold\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push_str(&quote(c));
        }
        out.push('\n');
        for (class, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(&quote(class));
            for n in row {
                let _ = write!(out, ",{n}");
            }
            out.push('\n');
        }
        out
    }
}

fn gold_of<'a>(gold: &'a HashMap<String, String>, pair_id: &str) -> Result<&'a str> {
    gold.get(pair_id)
        .map(String::as_str)
        .ok_or_else(|| Error::SchemaMismatch(format!("no gold label for `{pair_id}`")))
}

pub fn confusion_matrix(
    preds: &[Prediction],
    gold: &HashMap<String, String>,
    classes: &[String],
) -> Result<ConfusionMatrix> {
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let lookup = |c: &str| index.get(c).copied().ok_or_else(|| Error::UnknownClass(c.to_string()));
    let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
    for p in preds {
        let g = lookup(gold_of(gold, &p.pair_id)?)?;
        let q = lookup(&p.predicted_class)?;
        counts[g][q] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: usize,
    pub accuracy: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
}

/// Accuracy plus micro precision/recall/F1. When `negative_label` is given,
/// it counts neither as a predicted nor as a gold positive.
pub fn metrics(preds: &[Prediction], gold: &HashMap<String, String>, negative_label: Option<&str>) -> Result<Metrics> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no predictions to score".into()));
    }
    let is_positive = |c: &str| negative_label != Some(c);
    let (mut correct, mut correct_pos, mut guessed, mut gold_pos) = (0usize, 0usize, 0usize, 0usize);
    for p in preds {
        let g = gold_of(gold, &p.pair_id)?;
        let hit = g == p.predicted_class;
        correct += usize::from(hit);
        if is_positive(&p.predicted_class) {
            guessed += 1;
            correct_pos += usize::from(hit);
        }
        gold_pos += usize::from(is_positive(g));
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(correct_pos, guessed);
    let recall = ratio(correct_pos, gold_pos);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        total: preds.len(),
        accuracy: ratio(correct, preds.len()),
        micro_precision: precision,
        micro_recall: recall,
        micro_f1: f1,
    })
}
