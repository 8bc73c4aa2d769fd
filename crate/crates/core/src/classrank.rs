//! Per-exemplar class rankings, Borda aggregation, and contrastive class selection.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::pair_class_score;
use crate::types::{ContrastiveSet, Embedding, ExemplarSet};

/// Classes ordered by (score descending, name ascending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedClassList {
    pub seed_pair_id: String,
    pub entries: Vec<(String, f64)>,
}

impl RankedClassList {
    fn sorted(seed_pair_id: String, mut entries: Vec<(String, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { seed_pair_id, entries }
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(c, _)| c.as_str())
    }
}

/// Scores one exemplar against every class in the index.
pub fn seed_class_ranking(
    seed_pair_id: &str,
    seed_repr: &Embedding,
    class_index: &BTreeMap<String, ExemplarSet>,
    k: usize,
) -> Result<RankedClassList> {
    if class_index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let entries = class_index
        .iter()
        .map(|(name, set)| Ok((name.clone(), pair_class_score(seed_repr, set, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedClassList::sorted(seed_pair_id.to_string(), entries))
}

/// Borda count: a class at 0-based position `i` of a list over `n` classes
/// earns `n - i` points.
pub fn aggregate_rankings(lists: &[RankedClassList]) -> Result<RankedClassList> {
    let first = lists.first().ok_or(Error::EmptyIndex)?;
    let universe: BTreeSet<&str> = first.class_names().collect();
    if universe.len() != first.entries.len() {
        return Err(Error::InconsistentUniverse);
    }
    let n = universe.len();
    let mut points: HashMap<&str, f64> = universe.iter().map(|c| (*c, 0.0)).collect();
    for list in lists {
        if list.entries.len() != n {
            return Err(Error::InconsistentUniverse);
        }
        for (i, name) in list.class_names().enumerate() {
            *points.get_mut(name).ok_or(Error::InconsistentUniverse)? += (n - i) as f64;
        }
    }
    let entries = points.into_iter().map(|(c, p)| (c.to_string(), p)).collect();
    Ok(RankedClassList::sorted("aggregate".to_string(), entries))
}

/// The top `m` classes of `aggregated` once the positive class is removed.
/// Asking for more classes than exist returns all of them.
pub fn select_contrastive(positive_class: &str, aggregated: &RankedClassList, m: usize) -> Result<ContrastiveSet> {
    if !aggregated.class_names().any(|c| c == positive_class) {
        return Err(Error::UnknownClass(positive_class.to_string()));
    }
    let (negatives, scores) = aggregated
        .entries
        .iter()
        .filter(|(c, _)| c != positive_class)
        .take(m)
        .cloned()
        .unzip();
    Ok(ContrastiveSet {
        positive_class: positive_class.to_string(),
        negatives,
        scores,
    })
}

/// Contrastive sets for every class: each member of a class yields one
/// ranking, the rankings are aggregated, and the top `m` others kept.
pub fn contrastive_sets(
    class_index: &BTreeMap<String, ExemplarSet>,
    k: usize,
    m: usize,
) -> Result<BTreeMap<String, ContrastiveSet>> {
    let classes: Vec<&ExemplarSet> = class_index.values().collect();
    let sets = classes
        .par_iter()
        .map(|set| {
            if set.is_empty() {
                return Err(Error::EmptyExemplarSet(set.class_name.clone()));
            }
            let lists = set
                .members()
                .iter()
                .map(|member| seed_class_ranking(&member.pair_id, &member.embedding, class_index, k))
                .collect::<Result<Vec<_>>>()?;
            let aggregated = aggregate_rankings(&lists)?;
            select_contrastive(&set.class_name, &aggregated, m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sets.into_iter().map(|s| (s.positive_class.clone(), s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Origin, Provenance};
    use proptest::prelude::*;

    fn e(v: &[f32]) -> Embedding {
        Embedding::new(v.to_vec(), Provenance::AnalogousPattern).unwrap()
    }

    fn index(classes: &[(&str, Vec<Vec<f32>>)]) -> BTreeMap<String, ExemplarSet> {
        classes
            .iter()
            .map(|(name, members)| {
                let mut set = ExemplarSet::new(*name);
                for (i, m) in members.iter().enumerate() {
                    set.push(format!("{name}#{i}"), e(m), Origin::Seed).unwrap();
                }
                (name.to_string(), set)
            })
            .collect()
    }

    fn list(names: &[&str]) -> RankedClassList {
        RankedClassList {
            seed_pair_id: "s".into(),
            entries: names.iter().enumerate().map(|(i, n)| (n.to_string(), -(i as f64))).collect(),
        }
    }

    fn order(l: &RankedClassList) -> Vec<&str> {
        l.class_names().collect()
    }

    #[test]
    fn single_class_index() {
        let idx = index(&[("only", vec![vec![1.0, 2.0]])]);
        let r = seed_class_ranking("s", &e(&[0.5, 0.1]), &idx, 3).unwrap();
        assert_eq!(order(&r), ["only"]);
        assert!(seed_class_ranking("s", &e(&[1.0]), &BTreeMap::new(), 1).is_err());
    }

    #[test]
    fn self_similar_class_ranks_first() {
        let seed = vec![0.3, 0.4, 0.5];
        let idx = index(&[
            ("b", vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]),
            ("a", vec![seed.clone(), seed.clone()]),
            ("c", vec![vec![0.0, 0.0, -1.0]]),
        ]);
        let r = seed_class_ranking("s", &e(&seed), &idx, 2).unwrap();
        assert_eq!(r.entries[0].0, "a");
        assert!((r.entries[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_structure_matches_exhaustive_oracle() {
        let seed = [1.0f32, 0.0, 0.0, 0.0];
        let classes = vec![
            ("w", vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]),
            ("x", vec![vec![1.0, 0.1, 0.0, 0.0], vec![-1.0, 0.0, 0.0, 0.0]]),
            ("y", vec![vec![0.5, 0.0, 0.5, 0.0]]),
            ("z", vec![vec![1.0, 0.0, 0.0, 0.2], vec![1.0, 0.0, 0.3, 0.0], vec![0.0, 0.0, 0.0, 1.0]]),
        ];
        let k = 2;
        // Oracle: score every class from scratch and sort.
        let cos = |a: &[f32], b: &[f32]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
            let n = |v: &[f32]| v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            d / (n(a) * n(b))
        };
        let mut expected: Vec<(String, f64)> = classes
            .iter()
            .map(|(name, ms)| {
                let mut cs: Vec<f64> = ms.iter().map(|m| cos(&seed, m)).collect();
                cs.sort_by(|a, b| b.total_cmp(a));
                let t = k.min(cs.len());
                (name.to_string(), cs[..t].iter().sum::<f64>() / t as f64)
            })
            .collect();
        expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let got = seed_class_ranking("s", &e(&seed), &index(&classes), k).unwrap();
        assert_eq!(order(&got), expected.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>());
        for ((_, a), (_, b)) in got.entries.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_list_aggregates_to_itself() {
        let l = list(&["c", "a", "b"]);
        assert_eq!(order(&aggregate_rankings(&[l]).unwrap()), ["c", "a", "b"]);
    }

    #[test]
    fn reversed_lists_tie_and_sort_by_name() {
        let agg = aggregate_rankings(&[list(&["b", "c", "a"]), list(&["a", "c", "b"])]).unwrap();
        assert_eq!(order(&agg), ["a", "b", "c"]);
        assert!(agg.entries.iter().all(|(_, s)| *s == 4.0));
    }

    #[test]
    fn borda_matches_hand_tally() {
        let lists = [
            list(&["p", "q", "r", "s", "t"]),
            list(&["r", "p", "t", "q", "s"]),
            list(&["q", "r", "p", "t", "s"]),
        ];
        // Points per list are 5,4,3,2,1 by position.
        // p: 5+4+3=12  q: 4+2+5=11  r: 3+5+4=12  s: 2+1+1=4  t: 1+3+2=6
        let agg = aggregate_rankings(&lists).unwrap();
        assert_eq!(
            agg.entries,
            vec![
                ("p".to_string(), 12.0),
                ("r".to_string(), 12.0),
                ("q".to_string(), 11.0),
                ("t".to_string(), 6.0),
                ("s".to_string(), 4.0),
            ]
        );
    }

    #[test]
    fn inconsistent_universes_are_rejected() {
        assert!(matches!(
            aggregate_rankings(&[list(&["a", "b"]), list(&["a", "c"])]),
            Err(Error::InconsistentUniverse)
        ));
        assert!(aggregate_rankings(&[list(&["a", "b"]), list(&["a"])]).is_err());
        assert!(aggregate_rankings(&[]).is_err());
    }

    #[test]
    fn positive_is_excluded_before_truncation() {
        let agg = list(&["pos", "n1", "n2"]);
        let cs = select_contrastive("pos", &agg, 1).unwrap();
        assert_eq!(cs.negatives, ["n1"]);
        let cs = select_contrastive("n1", &agg, 10).unwrap();
        assert_eq!(cs.negatives, ["pos", "n2"]);
        assert_eq!(cs.scores.len(), 2);
        assert!(select_contrastive("missing", &agg, 1).is_err());
    }

    #[test]
    fn contrastive_set_json_shape() {
        let cs = select_contrastive("pos", &list(&["pos", "n1"]), 6).unwrap();
        let json = serde_json::to_value(&cs).unwrap();
        assert_eq!(json, serde_json::json!({"positive_class": "pos", "negatives": ["n1"], "scores": [-1.0]}));
    }

    fn random_index() -> impl Strategy<Value = BTreeMap<String, ExemplarSet>> {
        let member = prop::collection::vec(0.05f32..1.0, 4);
        prop::collection::vec(prop::collection::vec(member, 1..4), 1..7).prop_map(|classes| {
            let named: Vec<(String, Vec<Vec<f32>>)> =
                classes.into_iter().enumerate().map(|(i, ms)| (format!("c{i}"), ms)).collect();
            let refs: Vec<(&str, Vec<Vec<f32>>)> = named.iter().map(|(n, m)| (n.as_str(), m.clone())).collect();
            index(&refs)
        })
    }

    proptest! {
        #[test]
        fn positive_never_contrastive(idx in random_index(), m in 1usize..8) {
            let sets = contrastive_sets(&idx, 2, m).unwrap();
            for (pos, cs) in &sets {
                prop_assert!(!cs.negatives.contains(pos));
                prop_assert_eq!(cs.negatives.len(), m.min(idx.len() - 1));
                let unique: BTreeSet<&String> = cs.negatives.iter().collect();
                prop_assert_eq!(unique.len(), cs.negatives.len());
            }
        }

        #[test]
        fn aggregation_ignores_list_order(idx in random_index(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let set = idx.values().next().unwrap();
            let mut lists: Vec<RankedClassList> = set
                .members()
                .iter()
                .map(|m| seed_class_ranking(&m.pair_id, &m.embedding, &idx, 2).unwrap())
                .collect();
            let a = aggregate_rankings(&lists).unwrap();
            lists.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(a, aggregate_rankings(&lists).unwrap());
        }

        #[test]
        fn rank_invariant_under_positive_rescaling(idx in random_index(), s in 0.1f32..10.0) {
            let seed = idx.values().next().unwrap().members()[0].embedding.clone();
            let base = seed_class_ranking("s", &seed, &idx, 2).unwrap();
            let scaled: BTreeMap<String, ExemplarSet> = idx
                .iter()
                .map(|(n, set)| {
                    let mut out = ExemplarSet::new(n.clone());
                    for m in set.members() {
                        let v = m.embedding.as_slice().iter().map(|x| x * s).collect();
                        out.push(m.pair_id.clone(), Embedding::new(v, m.embedding.provenance).unwrap(), m.origin).unwrap();
                    }
                    (n.clone(), out)
                })
                .collect();
            let got = seed_class_ranking("s", &seed, &scaled, 2).unwrap();
            // Rescaling only perturbs cosines at f32 rounding; compare ranks of
            // classes whose scores are separated by more than that.
            for (i, (name, score)) in base.entries.iter().enumerate() {
                let j = got.class_names().position(|c| c == name).unwrap();
                if i != j {
                    let other = &base.entries[j].1;
                    prop_assert!((score - other).abs() < 1e-6);
                }
            }
        }
    }
}
