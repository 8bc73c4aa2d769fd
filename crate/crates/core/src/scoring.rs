//! Cosine similarity, the top-k pair-class score and classifier fusion.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::types::{Embedding, ExemplarSet};

fn cosine_slices(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine similarity in 64-bit arithmetic.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    cosine_slices(a.as_slice(), b.as_slice())
}

/// Mean of the `k` largest cosines between `x_p` and `exemplars`, or of all
/// of them when there are fewer than `k`.
///
/// Ties at the cut are resolved by insertion index, which cannot change the
/// mean since tied values are equal.
pub fn top_k_mean<'a>(x_p: &Embedding, exemplars: impl IntoIterator<Item = &'a Embedding>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let mut cosines = exemplars
        .into_iter()
        .map(|e| cosine(x_p, e))
        .collect::<Result<Vec<f64>>>()?;
    if cosines.is_empty() {
        return Err(Error::EmptyInput("no exemplars to score against".into()));
    }
    // Stable sort keeps insertion order among equal cosines.
    cosines.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let take = k.min(cosines.len());
    Ok(cosines[..take].iter().sum::<f64>() / take as f64)
}

/// Similarity of a pair to a class: the averaged top-k cosines against the
/// class's exemplars.
pub fn pair_class_score(x_p: &Embedding, exemplars: &ExemplarSet, k: usize) -> Result<f64> {
    if exemplars.is_empty() {
        return Err(Error::EmptyExemplarSet(exemplars.class_name.clone()));
    }
    top_k_mean(x_p, exemplars.embeddings(), k)
}

/// Classifier score plus the weighted pair-class score.
pub fn fuse_score(s_cls: f64, pair_score: f64, lambda_weight: f64) -> Result<f64> {
    if !(lambda_weight.is_finite() && lambda_weight >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda_weight must be finite and non-negative, got {lambda_weight}"
        )));
    }
    if !s_cls.is_finite() || !pair_score.is_finite() {
        return Err(Error::NonFinite { index: 0 });
    }
    Ok(s_cls + lambda_weight * pair_score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Origin, Provenance};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(v: &[f32]) -> Embedding {
        Embedding::new(v.to_vec(), Provenance::AnalogousPattern).unwrap()
    }

    fn set(vs: &[Vec<f32>]) -> ExemplarSet {
        let mut s = ExemplarSet::new("c");
        for (i, v) in vs.iter().enumerate() {
            s.push(format!("p{i}"), e(v), Origin::Seed).unwrap();
        }
        s
    }

    /// Brute force: every cosine computed from scratch, full sort, average the head.
    fn oracle(x: &[f32], members: &[Vec<f32>], k: usize) -> f64 {
        let norm = |v: &[f32]| v.iter().map(|&a| (a as f64) * (a as f64)).sum::<f64>().sqrt();
        let mut all: Vec<f64> = members
            .iter()
            .map(|m| {
                let dot: f64 = x.iter().zip(m).map(|(&a, &b)| a as f64 * b as f64).sum();
                dot / (norm(x) * norm(m))
            })
            .collect();
        all.sort_by(|a, b| b.total_cmp(a));
        let n = k.min(all.len());
        all.iter().take(n).sum::<f64>() / n as f64
    }

    #[test]
    fn cosine_basics() {
        let v = e(&[0.3, -1.2, 4.0]);
        assert_abs_diff_eq!(cosine(&v, &v).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(cosine(&e(&[1.0, 0.0]), &e(&[0.0, 1.0])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine(&e(&[1.0, 0.0]), &e(&[1.0, 1.0])).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(cosine(&e(&[0.0, 0.0]), &e(&[1.0, 0.0])), Err(Error::ZeroNorm)));
        assert!(matches!(
            cosine(&e(&[1.0, 0.0]), &e(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn self_membership_scores_one() {
        let x = vec![0.2, 0.7, -0.1];
        assert_abs_diff_eq!(pair_class_score(&e(&x), &set(std::slice::from_ref(&x)), 1).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_members_score_zero() {
        let members = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0], vec![0.0, -3.0, 1.0]];
        for k in 1..5 {
            assert_eq!(pair_class_score(&e(&[1.0, 0.0, 0.0]), &set(&members), k).unwrap(), 0.0);
        }
    }

    #[test]
    fn top_two_of_five_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draw = |rng: &mut ChaCha8Rng| (0..3).map(|_| rng.random_range(-1.0f32..1.0)).collect::<Vec<_>>();
        let x = draw(&mut rng);
        let members: Vec<Vec<f32>> = (0..5).map(|_| draw(&mut rng)).collect();
        let got = pair_class_score(&e(&x), &set(&members), 2).unwrap();
        assert_abs_diff_eq!(got, oracle(&x, &members, 2), epsilon = 1e-12);
    }

    #[test]
    fn small_sets_average_everything() {
        let members = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_abs_diff_eq!(
            pair_class_score(&e(&[1.0, 0.0]), &set(&members), 10).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(
            pair_class_score(&e(&[1.0]), &ExemplarSet::new("x"), 1),
            Err(Error::EmptyExemplarSet(_))
        ));
    }

    #[test]
    fn negative_cosines_are_not_clamped() {
        let members = vec![vec![-1.0, 0.0]];
        assert_abs_diff_eq!(pair_class_score(&e(&[1.0, 0.0]), &set(&members), 1).unwrap(), -1.0);
    }

    #[test]
    fn fusion_arithmetic() {
        assert_eq!(fuse_score(0.7, 0.9, 0.0).unwrap(), 0.7);
        assert_eq!(fuse_score(0.0, 0.35, 1.0).unwrap(), 0.35);
        assert_abs_diff_eq!(fuse_score(0.8, 0.4, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert!(fuse_score(0.8, 0.4, -0.5).is_err());
        assert!(fuse_score(f64::NAN, 0.4, 0.5).is_err());
    }

    fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f32>> {
        prop::collection::vec(-10f32..10.0, dim).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    fn instance() -> impl Strategy<Value = (Vec<f32>, Vec<Vec<f32>>, usize)> {
        (1usize..=16).prop_flat_map(|dim| {
            (
                vec_strategy(dim),
                prop::collection::vec(vec_strategy(dim), 1..=50),
                1usize..=10,
            )
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((x, members, k) in instance()) {
            let got = pair_class_score(&e(&x), &set(&members), k).unwrap();
            prop_assert!((got - oracle(&x, &members, k)).abs() <= 1e-9);
        }

        #[test]
        fn scale_invariant((x, members, k) in instance(), s in 0.01f32..100.0, which in 0usize..50) {
            let base = pair_class_score(&e(&x), &set(&members), k).unwrap();
            let scaled_x: Vec<f32> = x.iter().map(|a| a * s).collect();
            let mut scaled_members = members.clone();
            let i = which % members.len();
            scaled_members[i] = members[i].iter().map(|a| a * s).collect();
            let a = pair_class_score(&e(&scaled_x), &set(&members), k).unwrap();
            let b = pair_class_score(&e(&x), &set(&scaled_members), k).unwrap();
            prop_assert!((a - base).abs() < 1e-6);
            prop_assert!((b - base).abs() < 1e-6);
        }

        #[test]
        fn permutation_invariant((x, members, k) in instance(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = pair_class_score(&e(&x), &set(&members), k).unwrap();
            let b = pair_class_score(&e(&x), &set(&shuffled), k).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn adding_a_strong_exemplar_never_decreases((x, members, k) in instance(), scale in 0.1f32..10.0) {
            let before = pair_class_score(&e(&x), &set(&members), k).unwrap();
            // x itself has cosine 1, which is >= any k-th largest cosine.
            let mut more = members.clone();
            more.push(x.iter().map(|a| a * scale).collect());
            let after = pair_class_score(&e(&x), &set(&more), k).unwrap();
            prop_assert!(after >= before - 1e-12);
        }
    }
}
