//! Planted-cluster corpora with known labels, for benchmarking expansion.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coexpand::ClassState;
use crate::error::{Error, Result};
use crate::store::EmbeddingStore;
use crate::types::{Embedding, ExemplarSet, Origin, Provenance};

#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub classes: usize,
    pub dim: usize,
    pub seeds_per_class: usize,
    /// Candidates are assigned to classes round-robin.
    pub candidates: usize,
    /// Norm of every cluster center; noise is unit-variance per dimension,
    /// so this sets the signal-to-noise ratio.
    pub center_norm: f64,
    /// Cosine between any two cluster centers.
    pub center_cosine: f64,
    pub rng_seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            classes: 5,
            dim: 32,
            seeds_per_class: 5,
            candidates: 200,
            center_norm: 16.0,
            center_cosine: 0.5,
            rng_seed: 2024,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub store: EmbeddingStore,
    pub seed_state: ClassState,
    pub candidates: Vec<String>,
    /// Planted class of every candidate.
    pub labels: BTreeMap<String, String>,
    pub centers: Vec<Vec<f64>>,
}

pub fn class_name(i: usize) -> String {
    format!("class{i}")
}

/// Unit centers `sqrt(1-c) e_i + sqrt(c) e_last`, pairwise cosine exactly `c`.
fn centers(spec: &PlantedSpec) -> Vec<Vec<f64>> {
    let a = (1.0 - spec.center_cosine).sqrt();
    let b = spec.center_cosine.sqrt();
    (0..spec.classes)
        .map(|i| {
            let mut v = vec![0.0; spec.dim];
            v[i] = a;
            v[spec.dim - 1] = b;
            v.iter().map(|x| x * spec.center_norm).collect()
        })
        .collect()
}

/// Every pair gets three independent unit-variance Gaussian draws around
/// its class center, one per provenance.
pub fn generate(spec: &PlantedSpec) -> Result<PlantedCorpus> {
    if spec.dim < spec.classes + 1 {
        return Err(Error::InvalidConfig("dim must exceed the number of classes".into()));
    }
    if !(0.0..1.0).contains(&spec.center_cosine) {
        return Err(Error::InvalidConfig("center_cosine must lie in [0, 1)".into()));
    }
    let centers = centers(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut store = EmbeddingStore::with_dim(spec.dim);
    let sample = |center: &[f64], rng: &mut ChaCha8Rng| -> Vec<f32> {
        center
            .iter()
            .map(|c| {
                let z: f64 = StandardNormal.sample(rng);
                (c + z) as f32
            })
            .collect()
    };
    let put_pair = |store: &mut EmbeddingStore, id: &str, class: usize, rng: &mut ChaCha8Rng| -> Result<()> {
        for p in Provenance::ALL {
            store.put(id, Embedding::new(sample(&centers[class], rng), p)?)?;
        }
        Ok(())
    };

    let mut seed_state = ClassState::new();
    for class in 0..spec.classes {
        let name = class_name(class);
        let mut set = ExemplarSet::new(&name);
        for s in 0..spec.seeds_per_class {
            let id = format!("{name}/seed{s}");
            put_pair(&mut store, &id, class, &mut rng)?;
            let e = store.require(&id, Provenance::AnalogousPattern)?.clone();
            set.push(id, e, Origin::Seed)?;
        }
        seed_state.insert(name, set);
    }

    let mut candidates = Vec::with_capacity(spec.candidates);
    let mut labels = BTreeMap::new();
    for j in 0..spec.candidates {
        let class = j % spec.classes;
        let id = format!("cand{j:04}");
        put_pair(&mut store, &id, class, &mut rng)?;
        labels.insert(id.clone(), class_name(class));
        candidates.push(id);
    }
    Ok(PlantedCorpus {
        store,
        seed_state,
        candidates,
        labels,
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_sixty_degrees_apart() {
        let spec = PlantedSpec::default();
        let cs = centers(&spec);
        for i in 0..cs.len() {
            for j in 0..i {
                let dot: f64 = cs[i].iter().zip(&cs[j]).map(|(a, b)| a * b).sum();
                let cos = dot / (spec.center_norm * spec.center_norm);
                assert!((cos - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = PlantedSpec {
            candidates: 10,
            ..Default::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.store, b.store);
        assert_eq!(a.store.len(), 3 * (25 + 10));
        assert_eq!(a.labels["cand0003"], "class3");
    }
}
