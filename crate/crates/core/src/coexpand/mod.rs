//! Sampled ensemble co-expansion of exemplar sets.
//!
//! In each of `T` rounds a candidate pair is ranked against every class:
//! the rank combines its mean similarity to a sample of the class's
//! exemplars (analogous-pattern representations) with its mean similarity to
//! samples of the class's contrastive classes (contrastive-pattern
//! representations). A round counts for class `c` only when `c` outranks
//! every one of its contrastive classes; the ensemble score sums the rank of
//! `c` over those rounds, plus one per round if the pair is already a member.

mod sampling;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sampling::{draw_stream, sample_exemplars, SampleDraw};

use crate::classrank::contrastive_sets;
use crate::error::{Error, Result};
use crate::scoring::cosine;
use crate::store::EmbeddingStore;
use crate::types::{ContrastiveSet, Embedding, ExemplarSet, ExpansionConfig, Origin, Provenance, RankCombiner};

pub type ClassState = BTreeMap<String, ExemplarSet>;
pub type ContrastiveMap = BTreeMap<String, ContrastiveSet>;

/// Mean cosine between `x_p` and the analogous representations of the drawn members.
pub fn sampled_positive_score(x_p: &Embedding, draw: &SampleDraw, store: &EmbeddingStore) -> Result<f64> {
    mean_cosine(x_p, draw, store, Provenance::AnalogousPattern)
}

/// Mean over contrastive classes of the mean cosine between `x_p` and the
/// contrastive-pattern representations drawn from that class.
pub fn sampled_contrastive_score(
    x_p: &Embedding,
    contrastive: &ContrastiveSet,
    draws: &BTreeMap<String, SampleDraw>,
    store: &EmbeddingStore,
) -> Result<f64> {
    if contrastive.negatives.is_empty() {
        return Err(Error::NoContrastiveClasses(contrastive.positive_class.clone()));
    }
    let mut total = 0.0;
    for negative in &contrastive.negatives {
        let draw = draws
            .get(negative)
            .ok_or_else(|| Error::UnknownClass(negative.clone()))?;
        total += mean_cosine(x_p, draw, store, Provenance::ContrastivePattern)?;
    }
    Ok(total / contrastive.negatives.len() as f64)
}

fn mean_cosine(x_p: &Embedding, draw: &SampleDraw, store: &EmbeddingStore, provenance: Provenance) -> Result<f64> {
    if draw.member_ids.is_empty() {
        return Err(Error::EmptyExemplarSet(draw.class_name.clone()));
    }
    let mut total = 0.0;
    for id in &draw.member_ids {
        total += cosine(x_p, store.require(id, provenance)?)?;
    }
    Ok(total / draw.member_ids.len() as f64)
}

/// Geometric mean of the two scores, each clamped at zero first.
pub fn pair_rank(r_pos: f64, r_neg: f64) -> f64 {
    (r_pos.max(0.0) * r_neg.max(0.0)).sqrt()
}

pub fn combine(combiner: RankCombiner, r_pos: f64, r_neg: f64) -> f64 {
    match combiner {
        RankCombiner::Geometric => pair_rank(r_pos, r_neg),
        RankCombiner::Arithmetic => (r_pos.max(0.0) + r_neg.max(0.0)) / 2.0,
    }
}

/// Draws for every class and round of one iteration, computed up front so
/// that all workers see the same samples.
#[derive(Debug, Clone)]
pub struct DrawTable {
    rounds: Vec<BTreeMap<String, SampleDraw>>,
}

impl DrawTable {
    pub fn build(state: &ClassState, config: &ExpansionConfig, iteration: u64) -> Result<Self> {
        let rounds = (1..=config.ensemble_rounds as u64)
            .map(|round| {
                state
                    .values()
                    .map(|set| {
                        let draw = sample_exemplars(set, config.sample_size, config.master_seed, iteration, round)?;
                        Ok((set.class_name.clone(), draw))
                    })
                    .collect::<Result<BTreeMap<_, _>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rounds })
    }

    /// Draws of the 1-based `round`.
    pub fn round(&self, round: usize) -> &BTreeMap<String, SampleDraw> {
        &self.rounds[round - 1]
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub r_pos: f64,
    pub max_r_neg: f64,
    pub dominated: bool,
}

/// Ensemble score of one pair for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub pair_id: String,
    pub class_name: String,
    #[serde(rename = "S")]
    pub score: f64,
    pub per_round: Vec<RoundOutcome>,
}

/// Read-only view of everything needed to score candidates in one iteration.
pub struct Scorer<'a> {
    pub state: &'a ClassState,
    pub contrastive: &'a ContrastiveMap,
    pub draws: &'a DrawTable,
    pub store: &'a EmbeddingStore,
    pub combiner: RankCombiner,
}

impl Scorer<'_> {
    /// Rank of the pair for `class` in `round`. Each class is scored with its
    /// own exemplars and its own contrastive set.
    fn rank(&self, x_p: &Embedding, round: usize, class: &str, cache: &mut HashMap<(usize, String), f64>) -> Result<f64> {
        if let Some(r) = cache.get(&(round, class.to_string())) {
            return Ok(*r);
        }
        let draws = self.draws.round(round);
        let draw = draws.get(class).ok_or_else(|| Error::UnknownClass(class.to_string()))?;
        let contrastive = self
            .contrastive
            .get(class)
            .ok_or_else(|| Error::NoContrastiveClasses(class.to_string()))?;
        let pos = sampled_positive_score(x_p, draw, self.store)?;
        let neg = sampled_contrastive_score(x_p, contrastive, draws, self.store)?;
        let r = combine(self.combiner, pos, neg);
        cache.insert((round, class.to_string()), r);
        Ok(r)
    }

    pub fn ensemble_score(&self, pair_id: &str, x_p: &Embedding, class: &str) -> Result<EnsembleResult> {
        self.ensemble_score_cached(pair_id, x_p, class, &mut HashMap::new())
    }

    fn ensemble_score_cached(
        &self,
        pair_id: &str,
        x_p: &Embedding,
        class: &str,
        cache: &mut HashMap<(usize, String), f64>,
    ) -> Result<EnsembleResult> {
        let set = self.state.get(class).ok_or_else(|| Error::UnknownClass(class.to_string()))?;
        let contrastive = self
            .contrastive
            .get(class)
            .ok_or_else(|| Error::NoContrastiveClasses(class.to_string()))?;
        let bonus = if set.contains(pair_id) { 1.0 } else { 0.0 };
        let mut score = 0.0;
        let mut per_round = Vec::with_capacity(self.draws.num_rounds());
        for round in 1..=self.draws.num_rounds() {
            let r_pos = self.rank(x_p, round, class, cache)?;
            let mut max_r_neg = f64::NEG_INFINITY;
            for negative in &contrastive.negatives {
                max_r_neg = max_r_neg.max(self.rank(x_p, round, negative, cache)?);
            }
            let dominated = r_pos > max_r_neg;
            if dominated {
                score += r_pos + bonus;
            }
            per_round.push(RoundOutcome {
                r_pos,
                max_r_neg,
                dominated,
            });
        }
        Ok(EnsembleResult {
            pair_id: pair_id.to_string(),
            class_name: class.to_string(),
            score,
            per_round,
        })
    }

    /// Ensemble scores of one pair for each listed class, sharing round ranks.
    pub fn score_classes(&self, pair_id: &str, x_p: &Embedding, classes: &[&str]) -> Result<Vec<EnsembleResult>> {
        let mut cache = HashMap::new();
        classes
            .iter()
            .map(|c| self.ensemble_score_cached(pair_id, x_p, c, &mut cache))
            .collect()
    }
}

/// One exemplar added by expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub iteration: u64,
    pub class: String,
    pub pair_id: String,
    #[serde(rename = "S")]
    pub score: f64,
    pub per_round: Vec<RoundOutcome>,
}

/// Scores every candidate against every class on a snapshot of `state`,
/// then appends up to `additions_per_iteration` candidates with a positive
/// score to each class, best first (ties by pair id).
pub fn expand_iteration(
    state: &mut ClassState,
    candidates: &[String],
    contrastive: &ContrastiveMap,
    config: &ExpansionConfig,
    store: &EmbeddingStore,
    iteration: u64,
) -> Result<Vec<AuditRecord>> {
    let draws = DrawTable::build(state, config, iteration)?;
    let scorer = Scorer {
        state,
        contrastive,
        draws: &draws,
        store,
        combiner: config.rank_combiner,
    };
    let classes: Vec<&str> = state.keys().map(String::as_str).collect();

    let per_candidate = candidates
        .par_iter()
        .map(|pair_id| {
            let x_p = store.require(pair_id, Provenance::MentionContext)?;
            let eligible: Vec<&str> = classes
                .iter()
                .copied()
                .filter(|c| !state[*c].contains(pair_id))
                .collect();
            scorer.score_classes(pair_id, x_p, &eligible)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut by_class: BTreeMap<&str, Vec<EnsembleResult>> = BTreeMap::new();
    for result in per_candidate.into_iter().flatten() {
        if result.score > 0.0 {
            let class = classes
                .iter()
                .copied()
                .find(|c| *c == result.class_name)
                .expect("scored class exists");
            by_class.entry(class).or_default().push(result);
        }
    }

    let mut additions = Vec::new();
    let mut commits = Vec::new();
    for (class, mut results) in by_class {
        results.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.pair_id.cmp(&b.pair_id)));
        results.truncate(config.additions_per_iteration);
        for r in results {
            commits.push((class.to_string(), r.pair_id.clone()));
            additions.push(AuditRecord {
                iteration,
                class: class.to_string(),
                pair_id: r.pair_id,
                score: r.score,
                per_round: r.per_round,
            });
        }
    }
    for (class, pair_id) in commits {
        let embedding = store.require(&pair_id, Provenance::AnalogousPattern)?.clone();
        state
            .get_mut(&class)
            .expect("class exists")
            .push(pair_id, embedding, Origin::Expanded)?;
    }
    Ok(additions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationAudit {
    pub iteration: u64,
    pub contrastive: ContrastiveMap,
    pub additions: Vec<AuditRecord>,
}

#[derive(Debug, Clone)]
pub struct ExpansionOutcome {
    pub state: ClassState,
    pub iterations: Vec<IterationAudit>,
    /// Candidates dropped before scoring, with the reason.
    pub rejected_candidates: Vec<(String, String)>,
}

const CANDIDATE_PROVENANCES: [Provenance; 3] = [
    Provenance::MentionContext,
    Provenance::AnalogousPattern,
    Provenance::ContrastivePattern,
];

/// Runs `config.iterations` rounds of contrastive ranking followed by
/// [`expand_iteration`]. Iterations are numbered from 1.
pub fn expand(
    seed_state: ClassState,
    candidate_pool: &[String],
    config: &ExpansionConfig,
    store: &EmbeddingStore,
) -> Result<ExpansionOutcome> {
    config.validate()?;
    if seed_state.is_empty() {
        return Err(Error::EmptyIndex);
    }
    for set in seed_state.values() {
        if set.is_empty() {
            return Err(Error::Seeds(format!("class `{}` has no seeds", set.class_name)));
        }
        for id in set.pair_ids() {
            store.require(id, Provenance::AnalogousPattern)?;
            store.require(id, Provenance::ContrastivePattern)?;
        }
    }

    let mut rejected_candidates = Vec::new();
    let mut pool = Vec::with_capacity(candidate_pool.len());
    for id in candidate_pool {
        match CANDIDATE_PROVENANCES.iter().find(|p| !store.contains(id, **p)) {
            Some(p) => rejected_candidates.push((id.clone(), format!("no `{p}` embedding"))),
            None if pool.contains(id) => rejected_candidates.push((id.clone(), "duplicate candidate".into())),
            None => pool.push(id.clone()),
        }
    }

    let mut state = seed_state;
    let mut iterations = Vec::with_capacity(config.iterations);
    let mut contrastive = contrastive_sets(&state, config.k, config.num_contrastive)?;
    for iteration in 1..=config.iterations as u64 {
        if iteration > 1 && config.rerank_each_iteration {
            contrastive = contrastive_sets(&state, config.k, config.num_contrastive)?;
        }
        let additions = expand_iteration(&mut state, &pool, &contrastive, config, store, iteration)?;
        iterations.push(IterationAudit {
            iteration,
            contrastive: contrastive.clone(),
            additions,
        });
    }
    Ok(ExpansionOutcome {
        state,
        iterations,
        rejected_candidates,
    })
}
