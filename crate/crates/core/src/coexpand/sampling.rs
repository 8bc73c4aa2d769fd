//! Reproducible exemplar draws.
//!
//! Every draw is a pure function of `(master_seed, iteration, round, class)`:
//!
//! 1. Hash `b"coset-draw-v1" || master_seed || iteration || round || class`
//!    with SHA-256, integers as little-endian `u64`, the class as UTF-8.
//! 2. Seed a ChaCha8 generator with the 32-byte digest.
//! 3. If the sample size covers the set, return every member in insertion
//!    order. Otherwise run a partial Fisher-Yates shuffle over the member
//!    indices: for `i` in `0..size`, draw `j` uniformly from `i..n` and swap
//!    positions `i` and `j`. The first `size` indices, in that order, are
//!    the draw.
//!
//! Uniform integers in `0..bound` use Lemire's multiply-and-reject on
//! `next_u64`, so draws do not depend on any library's range sampler.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::ExemplarSet;

const DOMAIN_TAG: &[u8] = b"coset-draw-v1";

/// A sample of one class's exemplars for one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub iteration: u64,
    /// 1-based round within the ensemble.
    pub round_index: u64,
    pub class_name: String,
    pub member_ids: Vec<String>,
}

/// The generator for one `(master_seed, iteration, round, class)` stream.
pub fn draw_stream(master_seed: u64, iteration: u64, round_index: u64, class_name: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN_TAG);
    hasher.update(master_seed.to_le_bytes());
    hasher.update(iteration.to_le_bytes());
    hasher.update(round_index.to_le_bytes());
    hasher.update(class_name.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Uniform integer in `0..bound`.
fn bounded(rng: &mut impl RngCore, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let wide = u128::from(rng.next_u64()) * u128::from(bound);
        if (wide as u64) >= threshold {
            return (wide >> 64) as u64;
        }
    }
}

/// Draws `min(sample_size, |set|)` members without replacement.
pub fn sample_exemplars(
    set: &ExemplarSet,
    sample_size: usize,
    master_seed: u64,
    iteration: u64,
    round_index: u64,
) -> Result<SampleDraw> {
    if set.is_empty() {
        return Err(Error::EmptyExemplarSet(set.class_name.clone()));
    }
    let ids: Vec<&str> = set.pair_ids().collect();
    let n = ids.len();
    let member_ids = if sample_size >= n {
        ids.iter().map(|s| s.to_string()).collect()
    } else {
        let mut rng = draw_stream(master_seed, iteration, round_index, &set.class_name);
        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..sample_size {
            let j = i + bounded(&mut rng, (n - i) as u64) as usize;
            order.swap(i, j);
        }
        order[..sample_size].iter().map(|&i| ids[i].to_string()).collect()
    };
    Ok(SampleDraw {
        iteration,
        round_index,
        class_name: set.class_name.clone(),
        member_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Embedding, Origin, Provenance};
    use std::collections::BTreeSet;

    fn set(n: usize) -> ExemplarSet {
        let mut s = ExemplarSet::new("org:founded_by");
        for i in 0..n {
            let e = Embedding::new(vec![1.0, i as f32], Provenance::AnalogousPattern).unwrap();
            s.push(format!("m{i}"), e, Origin::Seed).unwrap();
        }
        s
    }

    #[test]
    fn oversized_sample_returns_everything_in_order() {
        let d = sample_exemplars(&set(4), 4, 1, 0, 1).unwrap();
        assert_eq!(d.member_ids, ["m0", "m1", "m2", "m3"]);
        let d = sample_exemplars(&set(4), 9, 1, 0, 1).unwrap();
        assert_eq!(d.member_ids.len(), 4);
    }

    #[test]
    fn same_stream_same_draw() {
        let a = sample_exemplars(&set(10), 3, 42, 2, 3).unwrap();
        let b = sample_exemplars(&set(10), 3, 42, 2, 3).unwrap();
        assert_eq!(a, b);
        let unique: BTreeSet<_> = a.member_ids.iter().collect();
        assert_eq!(unique.len(), 3);
    }

    #[test]
    fn different_rounds_generally_differ() {
        let draws: BTreeSet<Vec<String>> = (1..=20)
            .map(|r| sample_exemplars(&set(10), 3, 7, 0, r).unwrap().member_ids)
            .collect();
        assert!(draws.len() > 10);
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(sample_exemplars(&ExemplarSet::new("c"), 3, 0, 0, 1).is_err());
    }

    #[test]
    fn bounded_is_in_range_and_covers_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = [false; 7];
        for _ in 0..500 {
            let x = bounded(&mut rng, 7);
            assert!(x < 7);
            seen[x as usize] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }
}
